#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lmx {

// Numeric payload: value per row, missing as nullopt.
using NumericData = std::vector<std::optional<double>>;

// Categorical payload: level codes per row plus the sorted level list.
struct CategoricalData {
    std::vector<std::optional<int>> codes;
    std::vector<std::string> levels;  // deduplicated, sorted lexicographically
};

class Column {
public:
    Column(std::string name, NumericData values)
        : name_(std::move(name)), payload_(std::move(values)) {}
    Column(std::string name, CategoricalData values)
        : name_(std::move(name)), payload_(std::move(values)) {}

    const std::string& name() const { return name_; }
    bool is_numeric() const { return std::holds_alternative<NumericData>(payload_); }
    const NumericData& numeric() const;
    const CategoricalData& categorical() const;
    std::size_t size() const;
    bool is_missing(std::size_t row) const;
    std::size_t missing_count() const;

private:
    std::string name_;
    std::variant<NumericData, CategoricalData> payload_;
};

class DataFrame {
public:
    DataFrame() = default;
    DataFrame(std::vector<Column> columns, std::size_t n_rows);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    DataFrame with_column(Column col) const;

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

struct MissingCell {
    std::size_t row;  // 0-based
    std::string column;
};

enum class TransformKind { Log, Square };

struct GroupStatsRow {
    std::vector<std::string> labels;  // one level per grouping factor
    double min, q1, median, q3, max;
    std::size_t n;
};

// RFC-4180-ish CSV with a mandatory header; `NA` and the empty field are missing.
DataFrame read_csv(std::istream& in);
void write_csv(const DataFrame& df, std::ostream& out);

// One entry per missing cell, ordered by column then row.
std::vector<MissingCell> missing_report(const DataFrame& df);

// Adds `<col>.c`, the column shifted by minus its non-missing mean.
DataFrame derive_center(const DataFrame& df, const std::string& col);

// Adds `<col>.log` or `<col>.sq`.
DataFrame derive_transform(const DataFrame& df, const std::string& col, TransformKind kind);

// Five-number summary (Tukey hinges) of the response per factor-level combination.
std::vector<GroupStatsRow> group_stats(const DataFrame& df, const std::string& response,
                                       const std::vector<std::string>& factors);

}  // namespace lmx
