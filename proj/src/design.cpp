#include "lmx/design.hpp"

#include <algorithm>
#include <set>

#include "lmx/errors.hpp"

namespace lmx {

namespace {

// Expands one variable over the kept rows into its design columns:
// a numeric column is itself; a categorical with L levels gives L-1
// treatment-coded dummies for levels 2..L.
struct ExpandedVar {
    std::vector<std::string> labels;
    std::vector<Eigen::VectorXd> columns;
};

ExpandedVar expand_variable(const DataFrame& df, const std::string& name,
                            const std::vector<std::size_t>& rows) {
    const Column& col = df.column(name);
    const auto n = static_cast<Eigen::Index>(rows.size());
    ExpandedVar out;
    if (col.is_numeric()) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = *col.numeric()[rows[i]];
        out.labels.push_back(name);
        out.columns.push_back(std::move(v));
    } else {
        const auto& cat = col.categorical();
        for (std::size_t lvl = 1; lvl < cat.levels.size(); ++lvl) {
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v[i] = *cat.codes[rows[i]] == static_cast<int>(lvl) ? 1.0 : 0.0;
            out.labels.push_back(name + cat.levels[lvl]);
            out.columns.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace

ModelFrame build_model_frame(const DataFrame& df, const FormulaAst& ast) {
    std::set<std::string> used;
    used.insert(ast.response);
    for (const auto& t : ast.fixed_terms)
        for (const auto& v : t.variables) used.insert(v);
    for (const auto& spec : ast.random_specs) {
        used.insert(spec.grouping);
        for (const auto& t : spec.slope_terms)
            for (const auto& v : t.variables) used.insert(v);
    }
    for (const auto& name : used)
        if (!df.has_column(name)) throw DataError("unknown variable '" + name + "' in formula");
    if (!df.column(ast.response).is_numeric())
        throw TypeError("response '" + ast.response + "' must be numeric");
    for (const auto& spec : ast.random_specs)
        if (df.column(spec.grouping).is_numeric())
            throw TypeError("grouping variable '" + spec.grouping + "' must be categorical");

    ModelFrame mf;
    mf.response = ast.response;
    for (std::size_t i = 0; i < df.n_rows(); ++i) {
        bool complete = true;
        for (const auto& name : used)
            if (df.column(name).is_missing(i)) {
                complete = false;
                break;
            }
        if (complete) mf.kept_rows.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(mf.kept_rows.size());
    if (n == 0) throw InsufficientDataError("no complete rows for the requested variables");

    mf.y.resize(n);
    const auto& resp = df.column(ast.response).numeric();
    for (Eigen::Index i = 0; i < n; ++i) mf.y[i] = *resp[mf.kept_rows[i]];

    // fixed design
    std::vector<Eigen::VectorXd> xcols;
    mf.x_labels.push_back("(Intercept)");
    xcols.push_back(Eigen::VectorXd::Ones(n));
    for (const auto& term : ast.fixed_terms) {
        if (term.is_intercept()) continue;
        std::vector<std::string> labels = {""};
        std::vector<Eigen::VectorXd> cols = {Eigen::VectorXd::Ones(n)};
        for (const auto& var : term.variables) {
            auto ev = expand_variable(df, var, mf.kept_rows);
            std::vector<std::string> nl;
            std::vector<Eigen::VectorXd> nc;
            for (std::size_t a = 0; a < cols.size(); ++a)
                for (std::size_t b = 0; b < ev.columns.size(); ++b) {
                    nl.push_back(labels[a].empty() ? ev.labels[b] : labels[a] + ":" + ev.labels[b]);
                    nc.push_back(cols[a].cwiseProduct(ev.columns[b]));
                }
            labels = std::move(nl);
            cols = std::move(nc);
        }
        for (std::size_t k = 0; k < cols.size(); ++k) {
            mf.x_labels.push_back(labels[k]);
            xcols.push_back(std::move(cols[k]));
        }
    }
    mf.X.resize(n, static_cast<Eigen::Index>(xcols.size()));
    for (std::size_t j = 0; j < xcols.size(); ++j) mf.X.col(static_cast<Eigen::Index>(j)) = xcols[j];

    // random-effects blocks
    for (const auto& spec : ast.random_specs) {
        ZBlock blk;
        blk.spec = spec;
        const auto& cat = df.column(spec.grouping).categorical();

        std::vector<std::string> clabels = {"(Intercept)"};
        std::vector<Eigen::VectorXd> ccols = {Eigen::VectorXd::Ones(n)};
        for (const auto& t : spec.slope_terms) {
            if (t.is_intercept()) continue;
            auto ev = expand_variable(df, t.variables[0], mf.kept_rows);
            for (std::size_t b = 0; b < ev.columns.size(); ++b) {
                clabels.push_back(ev.labels[b]);
                ccols.push_back(std::move(ev.columns[b]));
            }
        }
        blk.q = ccols.size();
        blk.column_labels = std::move(clabels);

        // levels actually present among kept rows, in level-list order
        std::vector<int> present;
        {
            std::set<int> seen;
            for (auto r : mf.kept_rows) seen.insert(*cat.codes[r]);
            present.assign(seen.begin(), seen.end());
        }
        blk.n_groups = present.size();
        for (int lvl : present) blk.group_labels.push_back(cat.levels[lvl]);

        blk.Z = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(blk.q * blk.n_groups));
        for (Eigen::Index i = 0; i < n; ++i) {
            const int code = *cat.codes[mf.kept_rows[i]];
            const auto gi = static_cast<std::size_t>(
                std::lower_bound(present.begin(), present.end(), code) - present.begin());
            for (std::size_t k = 0; k < blk.q; ++k)
                blk.Z(i, static_cast<Eigen::Index>(gi * blk.q + k)) = ccols[k][i];
        }
        mf.z_blocks.push_back(std::move(blk));
    }
    return mf;
}

}  // namespace lmx
