#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lmx/diagnostics.hpp"
#include "lmx/lmm.hpp"
#include "lmx/numstat.hpp"
#include "lmx/ols.hpp"

using namespace lmx;

namespace {

DataFrame from_text(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

// Synthetic regression data, reproducible via the library's own generator.
DataFrame synthetic_regression(std::uint64_t seed, int n) {
    numstat::Rng rng(seed);
    std::ostringstream os;
    os << "y,x\n";
    for (int i = 0; i < n; ++i) {
        const double x = 10.0 + 3.0 * rng.next_normal();
        const double y = 5.0 + 2.0 * x + rng.next_normal();
        os << y << ',' << x << '\n';
    }
    return from_text(os.str());
}

// Balanced two-group toy: 2 groups x 4 observations.
DataFrame toy_two_groups() {
    return from_text("g,y\na,1.3\na,0.8\na,1.1\na,0.9\nb,3.1\nb,2.9\nb,3.3\nb,2.8\n");
}

// Dense multivariate-normal oracle for the ML profiled objective:
// -2 log N(y; X beta, sigma^2 (I + theta^2 Z Z')), beta by GLS, sigma^2 by
// golden-section search on the log scale. Shares no code with solve_pls.
double dense_ml_oracle(const ModelFrame& mf, double theta) {
    const Eigen::MatrixXd& Z = mf.z_blocks[0].Z;
    const auto n = static_cast<double>(mf.n());
    const Eigen::MatrixXd V0 =
        Eigen::MatrixXd::Identity(mf.y.size(), mf.y.size()) + theta * theta * Z * Z.transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(V0);
    const Eigen::MatrixXd Vi = llt.solve(Eigen::MatrixXd::Identity(V0.rows(), V0.cols()));
    const Eigen::VectorXd beta =
        (mf.X.transpose() * Vi * mf.X).ldlt().solve(mf.X.transpose() * Vi * mf.y);
    const Eigen::VectorXd r = mf.y - mf.X * beta;
    const double q = r.dot(Vi * r);
    double logdet = 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));

    const auto neg2ll = [&](double log_s2) {
        const double s2 = std::exp(log_s2);
        return n * std::log(2.0 * M_PI * s2) + logdet + q / s2;
    };
    double lo = std::log(q / n) - 8.0, hi = std::log(q / n) + 8.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        if (neg2ll(c) < neg2ll(d))
            hi = d, d = c, c = hi - gr * (hi - lo);
        else
            lo = c, c = d, d = lo + gr * (hi - lo);
    }
    return neg2ll(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("centering invariance of OLS slopes") {
    const DataFrame df = synthetic_regression(11, 30);
    const OlsFit raw = fit_ols(build_model_frame(df, parse_formula("y ~ x")));
    const OlsFit cen = fit_ols(build_model_frame(derive_center(df, "x"), parse_formula("y ~ x.c")));
    CHECK(cen.coefficients[1] == doctest::Approx(raw.coefficients[1]).epsilon(1e-9));
    CHECK(cen.std_errors[1] == doctest::Approx(raw.std_errors[1]).epsilon(1e-9));
    CHECK(cen.t_values[1] == doctest::Approx(raw.t_values[1]).epsilon(1e-9));
    CHECK(cen.sigma == doctest::Approx(raw.sigma).epsilon(1e-9));
    CHECK(cen.r2 == doctest::Approx(raw.r2).epsilon(1e-9));
    CHECK(cen.f_stat == doctest::Approx(raw.f_stat).epsilon(1e-9));
    // the new intercept is the prediction at the predictor mean
    double xbar = 0.0;
    for (const auto& v : df.column("x").numeric()) xbar += *v;
    xbar /= static_cast<double>(df.n_rows());
    CHECK(cen.coefficients[0] ==
          doctest::Approx(raw.coefficients[0] + raw.coefficients[1] * xbar).epsilon(1e-9));
}

TEST_CASE("normal-equation orthogonality") {
    const DataFrame df = synthetic_regression(23, 50);
    const OlsFit fit = fit_ols(build_model_frame(df, parse_formula("y ~ x")));
    CHECK((fit.frame.X.transpose() * fit.residuals).norm() <=
          1e-8 * fit.frame.y.norm());
}

TEST_CASE("profiled ML objective matches the dense oracle on a 5-point grid") {
    const ModelFrame mf = build_model_frame(toy_two_groups(), parse_formula("y ~ 1 + (1|g)"));
    for (double theta : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        CHECK(profiled_objective({theta}, mf, false) ==
              doctest::Approx(dense_ml_oracle(mf, theta)).epsilon(1e-6));
    }
}

TEST_CASE("optimum of fit_lmm matches a grid plus golden-section search on the oracle") {
    const ModelFrame mf = build_model_frame(toy_two_groups(), parse_formula("y ~ 1 + (1|g)"));
    const LmmFit fit = fit_lmm(mf, false);
    // oracle optimum over theta by golden-section on a bracketing grid
    double best = 0.0, bestv = 1e300;
    for (double t = 0.0; t <= 10.0; t += 0.25) {
        const double v = dense_ml_oracle(mf, t);
        if (v < bestv) bestv = v, best = t;
    }
    double lo = std::max(0.0, best - 0.25), hi = best + 0.25;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 100; ++it) {
        if (dense_ml_oracle(mf, c) < dense_ml_oracle(mf, d))
            hi = d, d = c, c = hi - gr * (hi - lo);
        else
            lo = c, c = d, d = lo + gr * (hi - lo);
    }
    const double theta_star = 0.5 * (lo + hi);
    CHECK(fit.theta[0] == doctest::Approx(theta_star).epsilon(1e-4));
    CHECK(fit.criterion == doctest::Approx(dense_ml_oracle(mf, theta_star)).epsilon(1e-6));
}

TEST_CASE("theta = 0 collapses the mixed objective to OLS") {
    const DataFrame df = toy_two_groups();
    const ModelFrame mixed = build_model_frame(df, parse_formula("y ~ 1 + (1|g)"));
    const OlsFit ols = fit_ols(build_model_frame(df, parse_formula("y ~ 1")));
    const double n = static_cast<double>(ols.frame.n());
    const double rss = ols.residuals.squaredNorm();
    CHECK(profiled_objective({0.0}, mixed, false) ==
          doctest::Approx(n * std::log(2.0 * M_PI * rss / n) + n).epsilon(1e-8));
}

TEST_CASE("shift equivariance of mixed fits") {
    const DataFrame df = from_text(
        "g,x,y\na,0,1.2\na,1,2.7\na,0,0.9\na,1,2.4\nb,0,2.1\nb,1,3.3\nb,0,1.8\nb,1,3.6\n"
        "c,0,1.5\nc,1,2.9\nc,0,1.3\nc,1,3.1\n");
    const ModelFrame mf = build_model_frame(df, parse_formula("y ~ x + (1|g)"));
    const LmmFit base = fit_lmm(mf, true);

    ModelFrame shifted = mf;
    const double c = 100.0;
    shifted.y.array() += c;
    const LmmFit moved = fit_lmm(shifted, true);

    CHECK(moved.fixed_estimates[0] == doctest::Approx(base.fixed_estimates[0] + c).epsilon(1e-6));
    CHECK(moved.fixed_estimates[1] == doctest::Approx(base.fixed_estimates[1]).epsilon(1e-6));
    CHECK(moved.fixed_std_errors[0] == doctest::Approx(base.fixed_std_errors[0]).epsilon(1e-6));
    // variance components sit on a flat profiled objective, so the optimizer
    // only pins them to ~1e-4 relative
    CHECK(moved.varcomps[0].variances[0] ==
          doctest::Approx(base.varcomps[0].variances[0]).epsilon(1e-4));
    CHECK(moved.residual_variance == doctest::Approx(base.residual_variance).epsilon(1e-4));
    const auto tbl_base = coef_by_group(base);
    const auto tbl_moved = coef_by_group(moved);
    for (Eigen::Index g = 0; g < tbl_base[0].rows(); ++g)
        CHECK(tbl_moved[0](g, 0) == doctest::Approx(tbl_base[0](g, 0) + c).epsilon(1e-6));
}

TEST_CASE("BLUPs sum to zero and shrink toward the grand mean on balanced data") {
    const DataFrame df = from_text(
        "g,y\na,1.0\na,1.4\na,0.9\na,1.1\nb,3.2\nb,2.8\nb,3.1\nb,2.9\nc,2.0\nc,2.2\nc,1.9\nc,2.1\n");
    const ModelFrame mf = build_model_frame(df, parse_formula("y ~ 1 + (1|g)"));
    const LmmFit fit = fit_lmm(mf, true);
    const Eigen::MatrixXd& b = fit.blups[0];
    CHECK(std::abs(b.col(0).sum()) < 1e-8 * (1.0 + b.col(0).cwiseAbs().maxCoeff()));
    const auto tbl = coef_by_group(fit)[0];
    const double mu = fit.fixed_estimates[0];
    const double means[] = {1.1, 3.0, 2.05};
    for (int g = 0; g < 3; ++g) {
        const double lo = std::min(mu, means[g]) - 1e-8;
        const double hi = std::max(mu, means[g]) + 1e-8;
        CHECK(tbl(g, 0) >= lo);
        CHECK(tbl(g, 0) <= hi);
    }
}

TEST_CASE("nested ML criteria are monotone") {
    const DataFrame df = from_text(
        "g,x,y\na,0,1.2\na,1,2.7\na,0,0.9\na,1,2.4\nb,0,2.1\nb,1,3.3\nb,0,1.8\nb,1,3.6\n"
        "c,0,1.5\nc,1,2.9\nc,0,1.3\nc,1,3.1\n");
    const LmmFit null_fit = fit_lmm(build_model_frame(df, parse_formula("y ~ 1 + (1|g)")), false);
    const LmmFit full_fit = fit_lmm(build_model_frame(df, parse_formula("y ~ x + (1|g)")), false);
    CHECK(full_fit.criterion <= null_fit.criterion + 1e-6);
}

TEST_CASE("row reordering leaves every reported scalar unchanged") {
    const DataFrame df = from_text(
        "g,x,y\na,0,1.2\na,1,2.7\nb,0,2.1\nb,1,3.3\nc,0,1.5\nc,1,2.9\na,0,0.9\nb,1,3.6\n");
    const DataFrame rev = from_text(
        "g,x,y\nb,1,3.6\na,0,0.9\nc,1,2.9\nc,0,1.5\nb,1,3.3\nb,0,2.1\na,1,2.7\na,0,1.2\n");
    const LmmFit f1 = fit_lmm(build_model_frame(df, parse_formula("y ~ x + (1|g)")), true);
    const LmmFit f2 = fit_lmm(build_model_frame(rev, parse_formula("y ~ x + (1|g)")), true);
    CHECK(f1.criterion == doctest::Approx(f2.criterion).epsilon(1e-10));
    CHECK(f1.fixed_estimates[1] == doctest::Approx(f2.fixed_estimates[1]).epsilon(1e-8));
    CHECK(f1.varcomps[0].variances[0] ==
          doctest::Approx(f2.varcomps[0].variances[0]).epsilon(1e-8));
    CHECK(f1.residual_variance == doctest::Approx(f2.residual_variance).epsilon(1e-8));
}

TEST_CASE("dfbeta refits agree with the closed-form hat-matrix identity") {
    const DataFrame df = synthetic_regression(31, 20);
    const ModelFrame mf = build_model_frame(df, parse_formula("y ~ x"));
    const InfluenceReport rep = dfbeta_ols(mf);
    const OlsFit full = fit_ols(mf);
    for (Eigen::Index i = 0; i < rep.dfbeta.rows(); ++i) {
        const Eigen::VectorXd xi = mf.X.row(i).transpose();
        const double hii = xi.dot(full.xtx_inv * xi);
        const Eigen::VectorXd closed = full.xtx_inv * xi * full.residuals[i] / (1.0 - hii);
        for (Eigen::Index j = 0; j < rep.dfbeta.cols(); ++j)
            CHECK(rep.dfbeta(i, j) == doctest::Approx(closed[j]).epsilon(1e-9));
    }
}

TEST_CASE("chi-square one-df identity against the normal tail") {
    for (double x : {0.5, 1.0, 4.0, 11.618}) {
        const double expected = 2.0 * (1.0 - numstat::normal_cdf(std::sqrt(x)));
        CHECK(numstat::chisq_upper_p(x, 1) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("seeded simulation is byte-exact deterministic") {
    auto render = [](std::uint64_t seed) {
        numstat::Rng rng(seed);
        std::ostringstream os;
        os.precision(17);
        for (int i = 0; i < 200; ++i) os << rng.next_normal() << '\n';
        return os.str();
    };
    CHECK(render(42) == render(42));
    CHECK(render(42) != render(43));
}
