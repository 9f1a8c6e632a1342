#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lmx/dataframe.hpp"
#include "lmx/design.hpp"
#include "lmx/diagnostics.hpp"
#include "lmx/errors.hpp"
#include "lmx/formula.hpp"
#include "lmx/inference.hpp"
#include "lmx/lmm.hpp"
#include "lmx/numstat.hpp"
#include "lmx/ols.hpp"
#include "lmx/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

struct DeriveFlags {
    std::vector<std::string> center, log_cols, square;
};

lmx::DataFrame load_data(const std::string& path, const DeriveFlags& derive) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lmx::DataError("cannot open '" + path + "'");
    lmx::DataFrame df = lmx::read_csv(in);
    for (const auto& c : derive.center) df = lmx::derive_center(df, c);
    for (const auto& c : derive.log_cols)
        df = lmx::derive_transform(df, c, lmx::TransformKind::Log);
    for (const auto& c : derive.square)
        df = lmx::derive_transform(df, c, lmx::TransformKind::Square);
    return df;
}

void emit(const lmx::ReportDocument& doc, const std::string& format, const std::string& out) {
    const std::string text = format == "json" ? lmx::render_json(doc) : lmx::render_text(doc);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw lmx::DataError("cannot write '" + out + "'");
        f << text;
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw lmx::DataError("cannot write '" + path.string() + "'");
    f << content;
}

int run_fit(const std::string& data, const std::string& formula_text, bool reml_flag,
            bool ml_flag, const std::string& format, const std::string& out,
            const DeriveFlags& derive) {
    const lmx::FormulaAst ast = lmx::parse_formula(formula_text);
    const lmx::DataFrame df = load_data(data, derive);
    const lmx::ModelFrame frame = lmx::build_model_frame(df, ast);
    if (ast.random_specs.empty()) {
        if (reml_flag || ml_flag) {
            std::cerr << "Error: No random effects terms specified in formula\n";
            return kExitUsage;
        }
        emit(lmx::report_ols(lmx::fit_ols(frame), formula_text), format, out);
    } else {
        const bool reml = !ml_flag;  // REML is the default for mixed models
        emit(lmx::report_lmm(lmx::fit_lmm(frame, reml), formula_text), format, out);
    }
    return kExitOk;
}

int run_compare(const std::string& data, const std::string& null_text,
                const std::string& full_text, bool reml_flag, const std::string& format,
                const std::string& out, const DeriveFlags& derive) {
    if (reml_flag)
        std::cerr << "Warning: model comparison always refits with ML; --reml ignored.\n";
    const lmx::FormulaAst null_ast = lmx::parse_formula(null_text);
    const lmx::FormulaAst full_ast = lmx::parse_formula(full_text);
    const lmx::DataFrame df = load_data(data, derive);
    const lmx::LmmFit null_fit = lmx::fit_lmm(lmx::build_model_frame(df, null_ast), false);
    const lmx::LmmFit full_fit = lmx::fit_lmm(lmx::build_model_frame(df, full_ast), false);
    lmx::LrtResult lrt;
    try {
        lrt = lmx::lrt_compare(null_fit, full_fit);
    } catch (const lmx::DataError& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return kExitUsage;
    }
    emit(lmx::report_lrt(lrt, null_text, full_text), format, out);
    return kExitOk;
}

int run_diagnose(const std::string& data, const std::string& formula_text, bool ml_flag,
                 const std::string& out_dir, bool svg, const std::string& loo_coef,
                 std::size_t bins, const DeriveFlags& derive) {
    const lmx::FormulaAst ast = lmx::parse_formula(formula_text);
    const lmx::DataFrame df = load_data(data, derive);
    const lmx::ModelFrame frame = lmx::build_model_frame(df, ast);

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    Eigen::VectorXd residuals;
    lmx::PlotSeries rf;
    std::ostringstream summary;

    if (ast.random_specs.empty()) {
        const lmx::OlsFit fit = lmx::fit_ols(frame);
        residuals = fit.residuals;
        rf = lmx::residual_fitted(fit);

        const lmx::InfluenceReport inf = lmx::dfbeta_ols(frame);
        std::ostringstream dfb;
        dfb << "row";
        for (const auto& lbl : frame.x_labels) dfb << ',' << lbl;
        dfb << '\n';
        dfb.precision(12);
        for (Eigen::Index i = 0; i < inf.dfbeta.rows(); ++i) {
            dfb << frame.kept_rows[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < inf.dfbeta.cols(); ++j) dfb << ',' << inf.dfbeta(i, j);
            dfb << '\n';
        }
        write_file(dir / "dfbeta.csv", dfb.str());
        if (inf.flags.empty()) {
            summary << "Influence: no DFbeta value reaches half the magnitude of its "
                       "coefficient; no sign changes.\n";
        } else {
            for (const auto& fl : inf.flags)
                summary << "Influence flag: row " << frame.kept_rows[fl.row] << ", coefficient "
                        << frame.x_labels[fl.coefficient] << " (" << fl.reason << ")."
                        << " Consider rerunning the analysis without this point.\n";
        }
    } else {
        const lmx::LmmFit fit = lmx::fit_lmm(frame, !ml_flag);
        residuals = fit.residuals;
        rf = lmx::residual_fitted(fit);

        if (!loo_coef.empty()) {
            const auto it = std::find(frame.x_labels.begin(), frame.x_labels.end(), loo_coef);
            if (it == frame.x_labels.end())
                throw lmx::DataError("no fixed effect labeled '" + loo_coef + "'");
            const auto idx = static_cast<std::size_t>(it - frame.x_labels.begin());
            const auto loo = lmx::loo_fixed_effect(frame, !ml_flag, idx);
            std::ostringstream os;
            os << "row," << loo_coef << '\n';
            os.precision(12);
            std::size_t failures = 0;
            for (std::size_t i = 0; i < loo.size(); ++i) {
                os << frame.kept_rows[i] << ',';
                if (loo[i])
                    os << *loo[i];
                else {
                    os << "NA";
                    ++failures;
                }
                os << '\n';
            }
            write_file(dir / "loo.csv", os.str());
            if (failures)
                std::cerr << "Warning: " << failures << " leave-one-out refits failed to converge.\n";
            summary << "Leave-one-out: " << loo.size() << " refits of " << loo_coef
                    << " written to loo.csv.\n";
        }
    }

    write_file(dir / "residuals.csv", lmx::plot_series_csv(rf));
    const auto n_bins = bins > 0 ? bins : lmx::sturges_bins(static_cast<std::size_t>(residuals.size()));
    const lmx::PlotSeries hist = lmx::histogram_residuals(residuals, n_bins);
    write_file(dir / "hist.csv", lmx::plot_series_csv(hist));
    const lmx::PlotSeries qq = lmx::qq_points(residuals);
    write_file(dir / "qq.csv", lmx::plot_series_csv(qq));

    if (frame.p() >= 3) {
        const lmx::CollinearityReport col = lmx::collinearity_report(frame);
        std::ostringstream os;
        os << "column_a,column_b,pearson_r,flagged\n";
        os.precision(12);
        for (const auto& pr : col.pairs)
            os << col.labels[pr.col_a] << ',' << col.labels[pr.col_b] << ',' << pr.pearson_r
               << ',' << (pr.flagged ? 1 : 0) << '\n';
        os << "\ncolumn,vif,flagged\n";
        for (std::size_t j = 0; j < col.vif.size(); ++j)
            os << col.labels[j] << ',' << col.vif[j] << ',' << (col.vif_flagged[j] ? 1 : 0)
               << '\n';
        write_file(dir / "collinearity.csv", os.str());
        bool any = false;
        for (const auto& pr : col.pairs)
            if (pr.flagged) {
                summary << "Collinearity flag: " << col.labels[pr.col_a] << " vs "
                        << col.labels[pr.col_b] << " (r = " << lmx::format_number(pr.pearson_r)
                        << "). Consider dropping one predictor or combining them.\n";
                any = true;
            }
        for (std::size_t j = 0; j < col.vif.size(); ++j)
            if (col.vif_flagged[j]) {
                summary << "Collinearity flag: VIF of " << col.labels[j] << " is "
                        << lmx::format_number(col.vif[j]) << " (threshold 5).\n";
                any = true;
            }
        if (!any) summary << "Collinearity: no predictor pair or VIF exceeds the thresholds.\n";
    }

    if (svg) {
        write_file(dir / "residuals.svg", lmx::plot_series_svg(rf));
        write_file(dir / "hist.svg", lmx::plot_series_svg(hist));
        write_file(dir / "qq.svg", lmx::plot_series_svg(qq));
    }

    summary << "Check the residual plot for curvature (nonlinearity: consider adding "
               "transformed or squared predictors) and for a fan shape (heteroskedasticity: "
               "consider a log-transform of the response).\n";
    summary << "Check the histogram and Q-Q plot for non-normal residuals.\n";
    std::cout << summary.str();
    return kExitOk;
}

int run_describe(const std::string& data, const std::string& group_spec,
                 const std::string& format, const std::string& out, const DeriveFlags& derive) {
    const lmx::DataFrame df = load_data(data, derive);
    lmx::ReportDocument doc;

    lmx::ReportTable inv;
    inv.headers = {"Column", "Type", "Values"};
    for (const auto& c : df.columns()) {
        inv.row_names.push_back(c.name());
        if (c.is_numeric()) {
            double lo = 0, hi = 0;
            bool first = true;
            for (const auto& v : c.numeric())
                if (v) {
                    if (first) {
                        lo = hi = *v;
                        first = false;
                    }
                    lo = std::min(lo, *v);
                    hi = std::max(hi, *v);
                }
            inv.rows.push_back({lmx::ReportValue::txt("numeric"),
                                lmx::ReportValue::txt("[" + lmx::format_number(lo) + ", " +
                                                      lmx::format_number(hi) + "]")});
        } else {
            std::string lv;
            for (const auto& l : c.categorical().levels) {
                if (!lv.empty()) lv += ",";
                lv += l;
            }
            inv.rows.push_back(
                {lmx::ReportValue::txt("categorical"), lmx::ReportValue::txt("{" + lv + "}")});
        }
    }
    doc.sections.push_back({"Columns", std::move(inv)});

    const auto missing = lmx::missing_report(df);
    if (missing.empty()) {
        doc.sections.push_back({"Missing", std::string("no missing cells")});
    } else {
        std::map<std::string, std::size_t> per_col;
        for (const auto& m : missing) ++per_col[m.column];
        std::ostringstream os;
        os << missing.size() << " missing cell" << (missing.size() == 1 ? "" : "s");
        bool first = true;
        for (const auto& [col, cnt] : per_col) {
            os << (first ? " (" : ", ") << col;
            first = false;
        }
        os << ")";
        doc.sections.push_back({"Missing", os.str()});
    }

    nlohmann::json j;
    j["n_rows"] = df.n_rows();
    j["columns"] = nlohmann::json::array();
    for (const auto& c : df.columns())
        j["columns"].push_back({{"name", c.name()},
                                {"type", c.is_numeric() ? "numeric" : "categorical"},
                                {"missing", c.missing_count()}});

    if (!group_spec.empty()) {
        const auto by = group_spec.find(" BY ");
        if (by == std::string::npos)
            throw lmx::DataError("--group expects 'RESPONSE BY F1,F2'");
        const std::string response = group_spec.substr(0, by);
        std::vector<std::string> factors;
        std::stringstream fs(group_spec.substr(by + 4));
        std::string tok;
        while (std::getline(fs, tok, ',')) factors.push_back(tok);
        const auto stats = lmx::group_stats(df, response, factors);

        lmx::ReportTable gt;
        gt.headers = {"Group", "Min", "Q1", "Median", "Q3", "Max", "N"};
        j["group_stats"] = nlohmann::json::array();
        for (const auto& row : stats) {
            std::string label;
            for (const auto& l : row.labels) {
                if (!label.empty()) label += ":";
                label += l;
            }
            gt.row_names.push_back(label);
            gt.rows.push_back({lmx::ReportValue::num(row.min), lmx::ReportValue::num(row.q1),
                               lmx::ReportValue::num(row.median), lmx::ReportValue::num(row.q3),
                               lmx::ReportValue::num(row.max),
                               lmx::ReportValue::num(static_cast<double>(row.n))});
            j["group_stats"].push_back({{"group", label},
                                        {"min", row.min},
                                        {"q1", row.q1},
                                        {"median", row.median},
                                        {"q3", row.q3},
                                        {"max", row.max},
                                        {"n", row.n}});
        }
        doc.sections.push_back({"Group statistics", std::move(gt)});
    }
    doc.data = std::move(j);
    emit(doc, format, out);
    return kExitOk;
}

int run_simulate(std::size_t n, std::uint64_t seed, std::size_t reps, const std::string& out_dir,
                 bool svg) {
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    lmx::numstat::Rng rng(seed);
    for (std::size_t r = 1; r <= reps; ++r) {
        std::ostringstream os;
        os << "x,y\n";
        os.precision(17);
        lmx::PlotSeries s;
        s.kind = lmx::PlotSeries::Kind::Scatter;
        s.x_label = "x";
        s.y_label = "y";
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.next_normal();
            const double y = rng.next_normal();
            os << x << ',' << y << '\n';
            s.points.emplace_back(x, y);
        }
        const std::string stem = "sim_" + std::to_string(r);
        write_file(dir / (stem + ".csv"), os.str());
        if (svg) write_file(dir / (stem + ".svg"), lmx::plot_series_svg(s));
    }
    return kExitOk;
}

int run_writeup(const std::string& data, const std::string& null_text,
                const std::string& full_text, const std::string& effect,
                const std::string& unit, const std::string& out, const DeriveFlags& derive) {
    const lmx::DataFrame df = load_data(data, derive);
    const lmx::FormulaAst null_ast = lmx::parse_formula(null_text);
    const lmx::FormulaAst full_ast = lmx::parse_formula(full_text);
    const lmx::ModelFrame full_frame = lmx::build_model_frame(df, full_ast);
    const lmx::LmmFit null_ml = lmx::fit_lmm(lmx::build_model_frame(df, null_ast), false);
    const lmx::LmmFit full_ml = lmx::fit_lmm(full_frame, false);
    const lmx::LrtResult lrt = lmx::lrt_compare(null_ml, full_ml);
    // effect sizes are reported from the REML refit, as in common practice
    const lmx::LmmFit full_reml = lmx::fit_lmm(full_frame, true);
    const std::string paragraph = lmx::writeup_generate(full_reml, lrt, effect, unit);
    if (out.empty()) {
        std::cout << paragraph << '\n';
    } else {
        write_file(out, paragraph + "\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear and linear mixed-effects models from a formula language"};
    app.require_subcommand(1);

    std::string data, formula_text, null_text, full_text, format = "text", out, out_dir = ".";
    std::string loo_coef, group_spec, effect, unit;
    bool reml_flag = false, ml_flag = false, svg = false;
    std::size_t sim_n = 100, sim_reps = 1, bins = 0;
    std::uint64_t seed = 1;
    DeriveFlags derive;

    auto add_common = [&](CLI::App* cmd, bool with_format = true) {
        cmd->add_option("--data", data, "input CSV path")->required();
        cmd->add_option("--center", derive.center, "derive centered column <col>.c");
        cmd->add_option("--log", derive.log_cols, "derive log column <col>.log");
        cmd->add_option("--square", derive.square, "derive squared column <col>.sq");
        if (with_format) {
            cmd->add_option("--format", format, "text or json")
                ->check(CLI::IsMember({"text", "json"}));
            cmd->add_option("--out", out, "write the report to a file");
        }
    };

    CLI::App* fit = app.add_subcommand("fit", "fit one model and print its summary");
    add_common(fit);
    fit->add_option("--formula", formula_text, "model formula")->required();
    fit->add_flag("--reml", reml_flag, "restricted maximum likelihood (mixed default)");
    fit->add_flag("--ml", ml_flag, "maximum likelihood");

    CLI::App* compare = app.add_subcommand("compare", "likelihood-ratio test of nested models");
    add_common(compare);
    compare->add_option("--null", null_text, "null-model formula")->required();
    compare->add_option("--full", full_text, "full-model formula")->required();
    compare->add_flag("--reml", reml_flag, "ignored; comparison always uses ML");

    CLI::App* diagnose = app.add_subcommand("diagnose", "assumption checks and influence");
    add_common(diagnose, false);
    diagnose->add_option("--formula", formula_text, "model formula")->required();
    diagnose->add_flag("--ml", ml_flag, "maximum likelihood for mixed models");
    diagnose->add_flag("--reml", reml_flag, "restricted maximum likelihood (default)");
    diagnose->add_option("--out", out_dir, "output directory")->required();
    diagnose->add_flag("--svg", svg, "also write SVG plots");
    diagnose->add_option("--loo-coef", loo_coef, "fixed effect to track in leave-one-out");
    diagnose->add_option("--bins", bins, "histogram bin count (default: Sturges)");

    CLI::App* describe = app.add_subcommand("describe", "column inventory and missing report");
    add_common(describe);
    describe->add_option("--group", group_spec, "group stats: 'RESPONSE BY F1,F2'");

    CLI::App* simulate = app.add_subcommand("simulate", "seeded standard-normal scatter data");
    simulate->add_option("--n", sim_n, "points per replicate");
    simulate->add_option("--seed", seed, "generator seed");
    simulate->add_option("--reps", sim_reps, "number of replicates");
    simulate->add_option("--out", out_dir, "output directory")->required();
    simulate->add_flag("--svg", svg, "also write SVG plots");

    CLI::App* writeup = app.add_subcommand("writeup", "methods-paragraph generator");
    add_common(writeup);
    writeup->add_option("--null", null_text, "null-model formula")->required();
    writeup->add_option("--full", full_text, "full-model formula")->required();
    writeup->add_option("--effect", effect, "fixed-effect label under test")->required();
    writeup->add_option("--unit", unit, "unit annotation for the effect size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed())
            return run_fit(data, formula_text, reml_flag, ml_flag, format, out, derive);
        if (compare->parsed())
            return run_compare(data, null_text, full_text, reml_flag, format, out, derive);
        if (diagnose->parsed())
            return run_diagnose(data, formula_text, ml_flag, out_dir, svg, loo_coef, bins, derive);
        if (describe->parsed()) return run_describe(data, group_spec, format, out, derive);
        if (simulate->parsed()) return run_simulate(sim_n, seed, sim_reps, out_dir, svg);
        if (writeup->parsed())
            return run_writeup(data, null_text, full_text, effect, unit, out, derive);
    } catch (const lmx::ParseError& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const lmx::ConvergenceError& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const lmx::Error& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
