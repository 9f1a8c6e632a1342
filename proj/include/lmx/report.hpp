#pragma once

#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

#include "lmx/inference.hpp"
#include "lmx/lmm.hpp"
#include "lmx/ols.hpp"

namespace lmx {

// One table cell: text, a number (kept at full precision for JSON), or empty.
struct ReportValue {
    enum class Kind { Text, Number, Empty } kind = Kind::Empty;
    std::string text;
    double number = 0.0;

    static ReportValue txt(std::string s) { return {Kind::Text, std::move(s), 0.0}; }
    static ReportValue num(double v) { return {Kind::Number, {}, v}; }
    static ReportValue empty() { return {}; }
};

struct ReportTable {
    std::vector<std::string> headers;           // first header labels the row-name column
    std::vector<std::string> row_names;
    std::vector<std::vector<ReportValue>> rows; // one vector per row, headers.size()-1 cells
};

struct ReportSection {
    std::string title;
    std::variant<ReportTable, std::string> body;  // table or paragraph
};

struct ReportDocument {
    std::vector<ReportSection> sections;
    nlohmann::json data;  // structured twin with stable field names
};

// 4 significant decimals, scientific below 1e-4 in magnitude.
std::string format_number(double v);

// Conventional significance codes: *** .001, ** .01, * .05, . 0.1.
std::string significance_stars(double p);

std::string render_text(const ReportDocument& doc);
std::string render_json(const ReportDocument& doc);

ReportDocument report_ols(const OlsFit& fit, const std::string& formula_text);
ReportDocument report_lmm(const LmmFit& fit, const std::string& formula_text);
ReportDocument report_lrt(const LrtResult& lrt, const std::string& null_formula,
                          const std::string& full_formula);

// Methods-paragraph generator; `unit` annotates the effect size (e.g. "Hz").
std::string writeup_generate(const LmmFit& full_fit, const LrtResult& lrt,
                             const std::string& effect_label, const std::string& unit = "");

}  // namespace lmx
