#include "lmx/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lmx {

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    std::ostringstream os;
    if (v != 0.0 && std::abs(v) < 1e-4) {
        os.precision(3);
        os << std::scientific << v;
        return os.str();
    }
    // 4 significant decimals
    os.precision(4);
    os << std::fixed;
    const double mag = std::abs(v);
    if (mag >= 1e5) {
        os.str("");
        os.precision(6);
        os << std::defaultfloat << v;
        return os.str();
    }
    os << v;
    std::string s = os.str();
    return s;
}

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    if (p < 0.1) return ".";
    return " ";
}

namespace {

std::string cell_text(const ReportValue& v) {
    switch (v.kind) {
        case ReportValue::Kind::Text: return v.text;
        case ReportValue::Kind::Number: return format_number(v.number);
        default: return "";
    }
}

void render_table(std::ostringstream& os, const ReportTable& t) {
    const std::size_t ncols = t.headers.size();
    std::vector<std::vector<std::string>> grid;
    grid.push_back(t.headers);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<std::string> row;
        row.push_back(r < t.row_names.size() ? t.row_names[r] : "");
        for (const auto& c : t.rows[r]) row.push_back(cell_text(c));
        while (row.size() < ncols) row.emplace_back();
        grid.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(ncols, 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < ncols && c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < ncols && c < row.size(); ++c) {
            if (c) os << "  ";
            // left-align the row-name column, right-align numbers
            if (c == 0)
                os << row[c] << std::string(widths[c] - row[c].size(), ' ');
            else
                os << std::string(widths[c] - row[c].size(), ' ') << row[c];
        }
        os << '\n';
    }
}

}  // namespace

std::string render_text(const ReportDocument& doc) {
    std::ostringstream os;
    bool first = true;
    for (const auto& sec : doc.sections) {
        if (!first) os << '\n';
        first = false;
        if (!sec.title.empty()) os << sec.title << ":\n";
        if (std::holds_alternative<ReportTable>(sec.body))
            render_table(os, std::get<ReportTable>(sec.body));
        else
            os << std::get<std::string>(sec.body) << '\n';
    }
    return os.str();
}

std::string render_json(const ReportDocument& doc) { return doc.data.dump(2) + "\n"; }

namespace {

std::string five_number_line(const Eigen::VectorXd& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const auto n = s.size();
    auto med = [&](std::size_t lo, std::size_t hi) {
        const std::size_t m = hi - lo, mid = lo + m / 2;
        return m % 2 ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
    };
    const std::size_t half = (n + 1) / 2;
    std::ostringstream os;
    os << "Min " << format_number(s.front()) << "  1Q " << format_number(med(0, half))
       << "  Median " << format_number(med(0, n)) << "  3Q " << format_number(med(n - half, n))
       << "  Max " << format_number(s.back());
    return os.str();
}

}  // namespace

ReportDocument report_ols(const OlsFit& fit, const std::string& formula_text) {
    ReportDocument doc;
    doc.sections.push_back({"Call", std::string("ols(") + formula_text + ")"});
    doc.sections.push_back({"Residuals", five_number_line(fit.residuals)});

    ReportTable coefs;
    coefs.headers = {"", "Estimate", "Std. Error", "t value", "Pr(>|t|)", ""};
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        coefs.row_names.push_back(fit.frame.x_labels[static_cast<std::size_t>(j)]);
        coefs.rows.push_back({ReportValue::num(fit.coefficients[j]),
                              ReportValue::num(fit.std_errors[j]),
                              ReportValue::num(fit.t_values[j]),
                              ReportValue::num(fit.p_values[j]),
                              ReportValue::txt(significance_stars(fit.p_values[j]))});
    }
    doc.sections.push_back({"Coefficients", std::move(coefs)});
    doc.sections.push_back(
        {"", "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1"});

    std::ostringstream foot;
    foot << "Residual standard error: " << format_number(fit.sigma) << " on " << fit.df_resid
         << " degrees of freedom\n";
    foot << "Multiple R-squared: " << format_number(fit.r2)
         << ",  Adjusted R-squared: " << format_number(fit.adj_r2) << "\n";
    if (!std::isnan(fit.f_stat))
        foot << "F-statistic: " << format_number(fit.f_stat) << " on " << fit.f_df1 << " and "
             << fit.f_df2 << " DF,  p-value: " << format_number(fit.f_p);
    doc.sections.push_back({"", foot.str()});

    nlohmann::json j;
    j["model"] = "ols";
    j["formula"] = formula_text;
    j["coefficients"] = nlohmann::json::array();
    for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k)
        j["coefficients"].push_back({{"label", fit.frame.x_labels[static_cast<std::size_t>(k)]},
                                     {"estimate", fit.coefficients[k]},
                                     {"std_error", fit.std_errors[k]},
                                     {"t_value", fit.t_values[k]},
                                     {"p_value", fit.p_values[k]}});
    j["residuals"] = std::vector<double>(fit.residuals.data(),
                                         fit.residuals.data() + fit.residuals.size());
    j["sigma"] = fit.sigma;
    j["df_resid"] = fit.df_resid;
    j["r2"] = fit.r2;
    j["adj_r2"] = fit.adj_r2;
    if (!std::isnan(fit.f_stat))
        j["f_test"] = {{"statistic", fit.f_stat},
                       {"df1", fit.f_df1},
                       {"df2", fit.f_df2},
                       {"p_value", fit.f_p}};
    doc.data = std::move(j);
    return doc;
}

ReportDocument report_lmm(const LmmFit& fit, const std::string& formula_text) {
    ReportDocument doc;
    doc.sections.push_back(
        {"", std::string("Linear mixed model fit by ") + (fit.reml ? "REML" : "maximum likelihood")});
    doc.sections.push_back({"Formula", formula_text});

    ReportTable hdr;
    if (fit.reml) {
        hdr.headers = {"", "AIC", "BIC", "logLik", "deviance", "REMLdev"};
        hdr.row_names = {""};
        hdr.rows.push_back({ReportValue::num(fit.aic), ReportValue::num(fit.bic),
                            ReportValue::num(fit.log_likelihood),
                            ReportValue::num(fit.ml_deviance_at_estimate),
                            ReportValue::num(fit.criterion)});
    } else {
        hdr.headers = {"", "AIC", "BIC", "logLik", "deviance"};
        hdr.row_names = {""};
        hdr.rows.push_back({ReportValue::num(fit.aic), ReportValue::num(fit.bic),
                            ReportValue::num(fit.log_likelihood),
                            ReportValue::num(fit.criterion)});
    }
    doc.sections.push_back({"Criteria", std::move(hdr)});

    ReportTable vc;
    vc.headers = {"Groups", "Name", "Variance", "Std.Dev.", "Corr"};
    for (const auto& comp : fit.varcomps)
        for (Eigen::Index k = 0; k < comp.variances.size(); ++k) {
            vc.row_names.push_back(k == 0 ? comp.grouping : "");
            std::vector<ReportValue> row = {ReportValue::txt(comp.names[static_cast<std::size_t>(k)]),
                                            ReportValue::num(comp.variances[k]),
                                            ReportValue::num(comp.std_devs[k])};
            if (k > 0) row.push_back(ReportValue::num(comp.correlations(k, 0)));
            vc.rows.push_back(std::move(row));
        }
    vc.row_names.push_back("Residual");
    vc.rows.push_back({ReportValue::txt(""), ReportValue::num(fit.residual_variance),
                       ReportValue::num(std::sqrt(fit.residual_variance))});
    doc.sections.push_back({"Random effects", std::move(vc)});

    std::ostringstream counts;
    counts << "Number of obs: " << fit.n_obs << ", groups: ";
    for (std::size_t s = 0; s < fit.varcomps.size(); ++s) {
        if (s) counts << "; ";
        counts << fit.varcomps[s].grouping << ", " << fit.group_sizes[s];
    }
    doc.sections.push_back({"", counts.str()});

    ReportTable fx;
    fx.headers = {"", "Estimate", "Std. Error", "t value"};
    for (Eigen::Index k = 0; k < fit.fixed_estimates.size(); ++k) {
        fx.row_names.push_back(fit.fixed_labels[static_cast<std::size_t>(k)]);
        fx.rows.push_back({ReportValue::num(fit.fixed_estimates[k]),
                           ReportValue::num(fit.fixed_std_errors[k]),
                           ReportValue::num(fit.fixed_t_values[k])});
    }
    doc.sections.push_back({"Fixed effects", std::move(fx)});

    if (fit.fixed_estimates.size() > 1) {
        ReportTable corr;
        corr.headers = {""};
        for (Eigen::Index k = 0; k + 1 < fit.fixed_estimates.size(); ++k)
            corr.headers.push_back(fit.fixed_labels[static_cast<std::size_t>(k)]);
        for (Eigen::Index r = 1; r < fit.fixed_estimates.size(); ++r) {
            corr.row_names.push_back(fit.fixed_labels[static_cast<std::size_t>(r)]);
            std::vector<ReportValue> row;
            for (Eigen::Index c = 0; c < r; ++c)
                row.push_back(ReportValue::num(fit.fixed_correlation(r, c)));
            corr.rows.push_back(std::move(row));
        }
        doc.sections.push_back({"Correlation of Fixed Effects", std::move(corr)});
    }
    if (fit.reml)
        doc.sections.push_back(
            {"", "Note: AIC/BIC above use the REML criterion; refit with ML before "
                 "comparing models with different fixed effects."});
    if (fit.correlation_warning)
        doc.sections.push_back(
            {"", "Warning: a random-effect correlation is estimated near +-1 (degenerate fit)."});
    if (fit.boundary_warning)
        doc.sections.push_back(
            {"", "Warning: a variance component is estimated at the zero boundary."});

    nlohmann::json j;
    j["model"] = "lmm";
    j["formula"] = formula_text;
    j["reml"] = fit.reml;
    j["criterion"] = fit.criterion;
    j["log_likelihood"] = fit.log_likelihood;
    j["deviance_ml"] = fit.ml_deviance_at_estimate;
    j["aic"] = fit.aic;
    j["bic"] = fit.bic;
    j["n_obs"] = fit.n_obs;
    j["n_params"] = fit.n_params;
    j["coefficients"] = nlohmann::json::array();
    for (Eigen::Index k = 0; k < fit.fixed_estimates.size(); ++k)
        j["coefficients"].push_back({{"label", fit.fixed_labels[static_cast<std::size_t>(k)]},
                                     {"estimate", fit.fixed_estimates[k]},
                                     {"std_error", fit.fixed_std_errors[k]},
                                     {"t_value", fit.fixed_t_values[k]}});
    j["varcomps"] = nlohmann::json::array();
    for (std::size_t s = 0; s < fit.varcomps.size(); ++s) {
        const auto& comp = fit.varcomps[s];
        nlohmann::json terms = nlohmann::json::array();
        for (Eigen::Index k = 0; k < comp.variances.size(); ++k)
            terms.push_back({{"name", comp.names[static_cast<std::size_t>(k)]},
                             {"variance", comp.variances[k]},
                             {"std_dev", comp.std_devs[k]}});
        j["varcomps"].push_back({{"grouping", comp.grouping},
                                 {"n_groups", fit.group_sizes[s]},
                                 {"terms", std::move(terms)}});
    }
    j["varcomps"].push_back(
        {{"grouping", "Residual"},
         {"terms", nlohmann::json::array({{{"name", ""},
                                           {"variance", fit.residual_variance},
                                           {"std_dev", std::sqrt(fit.residual_variance)}}})}});
    doc.data = std::move(j);
    return doc;
}

ReportDocument report_lrt(const LrtResult& lrt, const std::string& null_formula,
                          const std::string& full_formula) {
    ReportDocument doc;
    ReportTable t;
    t.headers = {"", "Df", "AIC", "BIC", "logLik", "Chisq", "Chi Df", "Pr(>Chisq)", ""};
    t.row_names = {"null", "full"};
    t.rows.push_back({ReportValue::num(static_cast<double>(lrt.null_n_params)),
                      ReportValue::num(lrt.null_aic), ReportValue::num(lrt.null_bic),
                      ReportValue::num(lrt.null_log_likelihood), ReportValue::empty(),
                      ReportValue::empty(), ReportValue::empty(), ReportValue::empty()});
    t.rows.push_back({ReportValue::num(static_cast<double>(lrt.full_n_params)),
                      ReportValue::num(lrt.full_aic), ReportValue::num(lrt.full_bic),
                      ReportValue::num(lrt.full_log_likelihood), ReportValue::num(lrt.chisq),
                      ReportValue::num(static_cast<double>(lrt.chi_df)),
                      ReportValue::num(lrt.p_value),
                      ReportValue::txt(significance_stars(lrt.p_value))});
    doc.sections.push_back({"Likelihood ratio test", std::move(t)});
    doc.sections.push_back({"null", null_formula});
    doc.sections.push_back({"full", full_formula});

    std::ostringstream verdict;
    verdict << "The full model " << (lrt.p_value < 0.05 ? "fits significantly better than"
                                                        : "does not fit significantly better than")
            << " the null model (chisq(" << lrt.chi_df << ") = " << format_number(lrt.chisq)
            << ", p = " << format_number(lrt.p_value) << ").";
    doc.sections.push_back({"", verdict.str()});
    if (lrt.nesting_warning)
        doc.sections.push_back(
            {"", "Warning: the null model's fixed terms are not a subset of the full model's."});

    nlohmann::json j;
    j["null"] = {{"formula", null_formula},
                 {"df", lrt.null_n_params},
                 {"aic", lrt.null_aic},
                 {"bic", lrt.null_bic},
                 {"log_likelihood", lrt.null_log_likelihood}};
    j["full"] = {{"formula", full_formula},
                 {"df", lrt.full_n_params},
                 {"aic", lrt.full_aic},
                 {"bic", lrt.full_bic},
                 {"log_likelihood", lrt.full_log_likelihood}};
    j["lrt"] = {{"chisq", lrt.chisq}, {"df", lrt.chi_df}, {"p", lrt.p_value}};
    doc.data = std::move(j);
    return doc;
}

std::string writeup_generate(const LmmFit& full_fit, const LrtResult& lrt,
                             const std::string& effect_label, const std::string& unit) {
    std::ostringstream os;
    const std::string& response = full_fit.frame.response;

    std::vector<std::string> fixed;
    for (std::size_t k = 1; k < full_fit.fixed_labels.size(); ++k)
        fixed.push_back(full_fit.fixed_labels[k]);

    os << "We performed a linear mixed effects analysis of the relationship between " << response
       << " and the predictors of interest. As fixed effects, we entered ";
    for (std::size_t k = 0; k < fixed.size(); ++k) {
        if (k) os << (k + 1 == fixed.size() ? " and " : ", ");
        os << fixed[k];
    }
    bool any_interaction = false;
    for (const auto& lbl : fixed)
        if (lbl.find(':') != std::string::npos) any_interaction = true;
    os << (any_interaction ? " (with interaction term)" : " (without interaction term)")
       << " into the model. As random effects, we had intercepts for ";
    std::vector<std::string> slope_groups;
    std::vector<std::string> slope_vars;
    for (const auto& blk : full_fit.frame.z_blocks) {
        for (const auto& t : blk.spec.slope_terms)
            if (!t.is_intercept()) {
                slope_groups.push_back(blk.spec.grouping);
                for (const auto& v : t.variables)
                    if (std::find(slope_vars.begin(), slope_vars.end(), v) == slope_vars.end())
                        slope_vars.push_back(v);
            }
    }
    for (std::size_t s = 0; s < full_fit.frame.z_blocks.size(); ++s) {
        if (s) os << (s + 1 == full_fit.frame.z_blocks.size() ? " and " : ", ");
        os << full_fit.frame.z_blocks[s].spec.grouping << "s";
    }
    if (!slope_groups.empty()) {
        os << ", as well as ";
        for (std::size_t s = 0; s < slope_groups.size(); ++s) {
            if (s) os << " and ";
            os << "by-" << slope_groups[s];
        }
        os << " random slopes for the effect of ";
        for (std::size_t s = 0; s < slope_vars.size(); ++s) {
            if (s) os << " and ";
            os << slope_vars[s];
        }
    }
    os << ". Visual inspection of residual plots did not reveal any obvious deviations from "
          "homoscedasticity or normality. Significance was obtained by a likelihood ratio test "
          "of the full model with the effect in question against the model without the effect "
          "in question. ";

    // locate the tested effect's estimate and SE
    double est = 0.0, se = 0.0;
    bool found = false;
    for (std::size_t k = 0; k < full_fit.fixed_labels.size(); ++k)
        if (full_fit.fixed_labels[k] == effect_label) {
            est = full_fit.fixed_estimates[static_cast<Eigen::Index>(k)];
            se = full_fit.fixed_std_errors[static_cast<Eigen::Index>(k)];
            found = true;
        }

    std::ostringstream chi;
    chi.precision(2);
    chi << std::fixed << lrt.chisq;
    std::ostringstream pv;
    pv.precision(2);
    pv << std::defaultfloat << lrt.p_value;
    os << "The effect of " << effect_label << ' '
       << (lrt.p_value < 0.05 ? "affected " : "did not significantly affect ") << response
       << " (χ2(" << lrt.chi_df << ")=" << chi.str() << ", p=" << pv.str() << ")";
    if (found) {
        std::ostringstream e1, e2;
        e1.precision(1);
        e1 << std::fixed << std::abs(est);
        e2.precision(1);
        e2 << std::fixed << se;
        os << ", " << (est < 0 ? "lowering" : "raising") << " it by about " << e1.str();
        if (!unit.empty()) os << ' ' << unit;
        os << " ± " << e2.str() << " (standard errors)";
    }
    os << ".";
    return os.str();
}

}  // namespace lmx
