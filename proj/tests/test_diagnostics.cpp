#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "lmx/diagnostics.hpp"
#include "lmx/errors.hpp"
#include "lmx/numstat.hpp"

using namespace lmx;

namespace {

DataFrame from_text(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

DataFrame load_fixture(const std::string& name) {
    std::ifstream in(std::string(LMX_FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    return read_csv(in);
}

}  // namespace

TEST_CASE("residual-fitted series") {
    const OlsFit fit = fit_ols(build_model_frame(load_fixture("sex_pitch.csv"),
                                                 parse_formula("pitch ~ sex")));
    const PlotSeries s = residual_fitted(fit);
    REQUIRE(s.points.size() == 6);
    const double resid[] = {6.667, -22.333, 15.667, 2.000, -16.000, 14.000};
    for (int i = 0; i < 6; ++i) {
        CHECK(s.points[i].first == doctest::Approx(fit.fitted[i]));
        CHECK(s.points[i].second == doctest::Approx(resid[i]).epsilon(1e-3));
    }
}

TEST_CASE("politeness residual series excludes the missing row") {
    const ModelFrame mf = build_model_frame(
        load_fixture("politeness.csv"),
        parse_formula("frequency ~ attitude + (1|subject) + (1|scenario)"));
    const PlotSeries s = residual_fitted(fit_lmm(mf, true));
    CHECK(s.points.size() == 83);
}

TEST_CASE("histogram bins") {
    Eigen::VectorXd r(3);
    r << -1, 0, 1;
    const PlotSeries h = histogram_residuals(r, 2);
    REQUIRE(h.bin_counts.size() == 2);
    CHECK(h.bin_edges[0] == -1);
    CHECK(h.bin_edges[1] == 0);
    CHECK(h.bin_edges[2] == 1);
    CHECK(h.bin_counts[0] == 1);
    CHECK(h.bin_counts[1] == 2);  // the right edge of the last bin is inclusive
    CHECK(sturges_bins(83) == 8);
    // counts always sum to n
    Eigen::VectorXd big = Eigen::VectorXd::LinSpaced(83, -3.0, 3.0);
    for (std::size_t b : {1u, 4u, 9u}) {
        const PlotSeries s = histogram_residuals(big, b);
        std::size_t total = 0;
        for (auto c : s.bin_counts) total += c;
        CHECK(total == 83);
    }
}

TEST_CASE("qq plotting positions") {
    Eigen::VectorXd r(2);
    r << 1, -1;
    const PlotSeries s = qq_points(r);
    REQUIRE(s.points.size() == 2);
    const double expect = numstat::normal_quantile((2.0 - 0.375) / (2.0 + 0.25));
    CHECK(s.points[0].first == doctest::Approx(-expect).epsilon(1e-12));
    CHECK(s.points[1].first == doctest::Approx(expect).epsilon(1e-12));
    CHECK(s.points[0].second == -1);
    CHECK(s.points[1].second == 1);
}

TEST_CASE("qq of quantile-spaced residuals is collinear with slope one") {
    const std::size_t n = 40;
    Eigen::VectorXd r(n);
    for (std::size_t i = 1; i <= n; ++i)
        r[static_cast<Eigen::Index>(i - 1)] =
            numstat::normal_quantile((static_cast<double>(i) - 0.5) / n);
    const PlotSeries s = qq_points(r);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(s.points[i].second == doctest::Approx(s.points[i].first).epsilon(1e-9));
}

TEST_CASE("qq of a seeded normal sample is nearly straight") {
    numstat::Rng rng(7);
    const auto v = rng.normal(500);
    Eigen::VectorXd r(500);
    for (int i = 0; i < 500; ++i) r[i] = v[static_cast<std::size_t>(i)];
    const PlotSeries s = qq_points(r);
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : s.points) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const double n = 500.0;
    const double rho = (n * sxy - sx * sy) /
                       std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(rho > 0.995);
}

TEST_CASE("dfbeta matches the printed table and the closed form") {
    const ModelFrame mf =
        build_model_frame(load_fixture("age_pitch.csv"), parse_formula("pitch ~ age"));
    const InfluenceReport rep = dfbeta_ols(mf);
    CHECK(rep.dfbeta(0, 0) == doctest::Approx(-3.3645662).epsilon(1e-6));
    CHECK(rep.dfbeta(0, 1) == doctest::Approx(0.06437573).epsilon(1e-6));
    CHECK(rep.dfbeta(5, 0) == doctest::Approx(1.8551808).epsilon(1e-6));
    CHECK(rep.dfbeta(5, 1) == doctest::Approx(-0.06622744).epsilon(1e-6));

    const OlsFit full = fit_ols(mf);
    // slope without point 1
    CHECK(full.coefficients[1] - rep.dfbeta(0, 1) == doctest::Approx(-0.9742451).epsilon(1e-6));

    // hat-matrix identity dfbeta_i = (X'X)^-1 x_i e_i / (1 - h_ii)
    for (Eigen::Index i = 0; i < 6; ++i) {
        const Eigen::VectorXd xi = mf.X.row(i).transpose();
        const double hii = xi.dot(full.xtx_inv * xi);
        const Eigen::VectorXd closed = full.xtx_inv * xi * full.residuals[i] / (1.0 - hii);
        for (Eigen::Index j = 0; j < 2; ++j)
            CHECK(rep.dfbeta(i, j) == doctest::Approx(closed[j]).epsilon(1e-9));
    }
    // no influence flags on this fixture (max |dfbeta slope| = 0.066 << 0.455)
    CHECK(rep.flags.empty());
}

TEST_CASE("influence flags") {
    InfluenceReport rep;
    rep.dfbeta.resize(3, 1);
    rep.dfbeta << 1.0, 0.2, 2.5;
    Eigen::VectorXd beta(1);
    beta << 2.0;
    const auto flags = influence_flags(rep, beta);
    REQUIRE(flags.size() == 3);
    CHECK(flags[0].row == 0);
    CHECK(flags[0].reason == "half-magnitude");
    // 2.0 - 2.5 flips the sign and also exceeds half magnitude
    CHECK(flags[1].row == 2);
    CHECK(flags[1].reason == "half-magnitude");
    CHECK(flags[2].row == 2);
    CHECK(flags[2].reason == "sign-change");
}

TEST_CASE("duplicated rows halve the dfbeta scale without sign flips") {
    const DataFrame df = load_fixture("age_pitch.csv");
    const ModelFrame mf = build_model_frame(df, parse_formula("pitch ~ age"));
    const InfluenceReport rep = dfbeta_ols(mf);

    std::ostringstream dup;
    dup << "age,pitch\n";
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i < 6; ++i)
            dup << *df.column("age").numeric()[static_cast<std::size_t>(i)] << ','
                << *df.column("pitch").numeric()[static_cast<std::size_t>(i)] << '\n';
    const ModelFrame mf2 = build_model_frame(from_text(dup.str()), parse_formula("pitch ~ age"));
    const InfluenceReport rep2 = dfbeta_ols(mf2);
    const OlsFit full2 = fit_ols(mf2);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            if (std::abs(rep.dfbeta(i, j)) < 1e-9) continue;
            const double ratio = rep2.dfbeta(i, j) / rep.dfbeta(i, j);
            CHECK(ratio > 0.0);
            CHECK(ratio < 1.0);
        }
    for (Eigen::Index i = 0; i < rep2.dfbeta.rows(); ++i)
        CHECK((full2.coefficients[1] - rep2.dfbeta(i, 1)) * full2.coefficients[1] > 0.0);
}

TEST_CASE("loo_fixed_effect on duplicated rows is symmetric") {
    const DataFrame df = from_text(
        "g,x,y\na,0,1.2\na,1,2.3\na,0,1.2\nb,0,2.0\nb,1,3.4\nb,1,3.4\nc,0,1.4\nc,1,2.6\n");
    const ModelFrame mf = build_model_frame(df, parse_formula("y ~ x + (1|g)"));
    const auto loo = loo_fixed_effect(mf, true, 1);
    REQUIRE(loo.size() == 8);
    REQUIRE(loo[0].has_value());
    REQUIRE(loo[2].has_value());
    CHECK(*loo[0] == doctest::Approx(*loo[2]).epsilon(1e-6));  // exact duplicates
    CHECK(*loo[4] == doctest::Approx(*loo[5]).epsilon(1e-6));
    CHECK_THROWS_AS(loo_fixed_effect(mf, true, 9), DataError);
}

TEST_CASE("collinearity report") {
    // orthogonal dummies
    const DataFrame ortho = from_text("y,a,b\n1,1,1\n2,1,0\n3,0,1\n4,0,0\n5,1,1\n6,1,0\n7,0,1\n8,0,0\n");
    const ModelFrame mfo = build_model_frame(ortho, parse_formula("y ~ a + b"));
    const CollinearityReport rep = collinearity_report(mfo);
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].pearson_r == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(rep.pairs[0].flagged);
    CHECK(rep.vif[0] == doctest::Approx(1.0).epsilon(1e-9));

    // three proxies of one quantity: s, s + noise, 2s + noise
    std::ostringstream os;
    os << "y,s,t,u\n";
    numstat::Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        const double s = static_cast<double>(i);
        os << i << ',' << s << ',' << s + 0.1 * rng.next_normal() << ','
           << 2.0 * s + 0.1 * rng.next_normal() << '\n';
    }
    const ModelFrame mfp = build_model_frame(from_text(os.str()), parse_formula("y ~ s + t + u"));
    const CollinearityReport prox = collinearity_report(mfp);
    REQUIRE(prox.pairs.size() == 3);
    for (const auto& p : prox.pairs) {
        CHECK(std::abs(p.pearson_r) > 0.99);
        CHECK(p.flagged);
    }
    for (std::size_t j = 0; j < prox.vif.size(); ++j) CHECK(prox.vif_flagged[j]);

    const DataFrame constant = from_text("y,a,b\n1,1,2\n2,1,3\n3,1,4\n4,1,5\n");
    CHECK_THROWS_AS(
        collinearity_report(build_model_frame(constant, parse_formula("y ~ a + b"))), DataError);
}

TEST_CASE("qq affine equivariance") {
    Eigen::VectorXd r(7);
    r << 0.3, -1.2, 0.7, 2.2, -0.4, 0.0, 1.1;
    const PlotSeries base = qq_points(r);
    const PlotSeries scaled = qq_points((3.0 * r.array() + 2.0).matrix());
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(scaled.points[i].first == doctest::Approx(base.points[i].first).epsilon(1e-12));
        CHECK(scaled.points[i].second ==
              doctest::Approx(3.0 * base.points[i].second + 2.0).epsilon(1e-12));
    }
}

TEST_CASE("plot serialization") {
    Eigen::VectorXd r(3);
    r << -1, 0, 1;
    const PlotSeries h = histogram_residuals(r, 2);
    const std::string csv = plot_series_csv(h);
    CHECK(csv.find("edge,count") == 0);
    const std::string svg = plot_series_svg(h);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("width=\"640\" height=\"480\"") != std::string::npos);
}
