#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lmx/errors.hpp"
#include "lmx/ols.hpp"

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

TEST_CASE("sex model reproduces the full summary surface") {
    const OlsFit fit = fit_ols(build_model_frame(load_fixture("sex_pitch.csv"),
                                                 parse_formula("pitch ~ sex")));
    CHECK(fit.coefficients[0] == doctest::Approx(226.33).epsilon(1e-4));
    CHECK(fit.coefficients[1] == doctest::Approx(-98.33).epsilon(1e-4));
    CHECK(fit.std_errors[0] == doctest::Approx(10.18).epsilon(1e-3));
    CHECK(fit.std_errors[1] == doctest::Approx(14.40).epsilon(1e-3));
    CHECK(fit.t_values[0] == doctest::Approx(22.224).epsilon(1e-4));
    CHECK(fit.t_values[1] == doctest::Approx(-6.827).epsilon(1e-4));
    CHECK(fit.p_values[1] == doctest::Approx(0.00241).epsilon(5e-3));
    CHECK(fit.r2 == doctest::Approx(0.921).epsilon(1e-3));
    CHECK(fit.adj_r2 == doctest::Approx(0.9012).epsilon(1e-3));
    CHECK(fit.sigma == doctest::Approx(17.64).epsilon(1e-3));
    CHECK(fit.df_resid == 4);
    CHECK(fit.f_stat == doctest::Approx(46.61).epsilon(1e-3));
    CHECK(fit.f_df1 == 1);
    CHECK(fit.f_df2 == 4);
    CHECK(fit.f_p == doctest::Approx(0.002407).epsilon(1e-3));
    const double resid[] = {6.667, -22.333, 15.667, 2.000, -16.000, 14.000};
    for (int i = 0; i < 6; ++i)
        CHECK(fit.residuals[i] == doctest::Approx(resid[i]).epsilon(1e-3));
    // intercept + slope is the male group mean
    CHECK(fit.coefficients[0] + fit.coefficients[1] == doctest::Approx(128.0));
}

TEST_CASE("age model coefficients and centered refit") {
    const DataFrame df = load_fixture("age_pitch.csv");
    const OlsFit fit = fit_ols(build_model_frame(df, parse_formula("pitch ~ age")));
    CHECK(fit.coefficients[0] == doctest::Approx(267.0765).epsilon(1e-5));
    CHECK(fit.coefficients[1] == doctest::Approx(-0.9099).epsilon(1e-3));
    CHECK(fit.std_errors[0] == doctest::Approx(6.8522).epsilon(1e-4));
    CHECK(fit.std_errors[1] == doctest::Approx(0.1569).epsilon(1e-3));
    CHECK(fit.t_values[0] == doctest::Approx(38.98).epsilon(1e-3));
    CHECK(fit.t_values[1] == doctest::Approx(-5.80).epsilon(1e-2));
    CHECK(fit.p_values[0] == doctest::Approx(2.59e-06).epsilon(0.02));
    CHECK(fit.p_values[1] == doctest::Approx(0.00439).epsilon(0.02));

    const OlsFit centered =
        fit_ols(build_model_frame(derive_center(df, "age"), parse_formula("pitch ~ age.c")));
    CHECK(centered.coefficients[0] == doctest::Approx(230.8333).epsilon(1e-5));
    CHECK(centered.coefficients[1] == doctest::Approx(fit.coefficients[1]).epsilon(1e-10));
    CHECK(centered.std_errors[1] == doctest::Approx(fit.std_errors[1]).epsilon(1e-10));
    CHECK(centered.sigma == doctest::Approx(fit.sigma).epsilon(1e-10));
}

TEST_CASE("intercept-only fit is the mean with R-squared zero") {
    const OlsFit fit =
        fit_ols(build_model_frame(from_text("y\n1\n2\n3\n6\n"), parse_formula("y ~ 1")));
    CHECK(fit.coefficients[0] == doctest::Approx(3.0));
    CHECK(fit.r2 == 0.0);
    for (int i = 0; i < 4; ++i)
        CHECK(fit.residuals[i] == doctest::Approx(fit.frame.y[i] - 3.0));
}

TEST_CASE("fit invariants") {
    const OlsFit fit = fit_ols(build_model_frame(load_fixture("age_pitch.csv"),
                                                 parse_formula("pitch ~ age")));
    CHECK((fit.fitted + fit.residuals - fit.frame.y).norm() <
          1e-10 * fit.frame.y.norm());
    CHECK((fit.frame.X.transpose() * fit.residuals).norm() < 1e-8 * fit.frame.y.norm());
    CHECK(fit.adj_r2 <= fit.r2);
    // single-predictor model: the F-test p equals the slope's p
    CHECK(fit.f_p == doctest::Approx(fit.p_values[1]).epsilon(1e-10));
}

TEST_CASE("predict_ols") {
    const OlsFit fit = fit_ols(build_model_frame(load_fixture("age_pitch.csv"),
                                                 parse_formula("pitch ~ age")));
    Eigen::MatrixXd at_zero(1, 2);
    at_zero << 1.0, 0.0;
    CHECK(predict_ols(fit, at_zero)[0] == doctest::Approx(267.0765).epsilon(1e-5));
    Eigen::MatrixXd at_mean(1, 2);
    at_mean << 1.0, 239.0 / 6.0;
    CHECK(predict_ols(fit, at_mean)[0] == doctest::Approx(230.8333).epsilon(1e-5));
    CHECK((predict_ols(fit, fit.frame.X) - fit.fitted).norm() < 1e-12);
    CHECK_THROWS_AS(predict_ols(fit, Eigen::MatrixXd::Ones(1, 3)), DataError);
}

TEST_CASE("rank deficiency names the offending column") {
    // x2 = 2 * x1
    const DataFrame df = from_text("y,x1,x2\n1,1,2\n2,2,4\n3,3,6\n4,4,8\n");
    try {
        fit_ols(build_model_frame(df, parse_formula("y ~ x1 + x2")));
        FAIL("expected SingularDesignError");
    } catch (const SingularDesignError& e) {
        CHECK((e.column() == "x1" || e.column() == "x2"));
    }
}

TEST_CASE("too few observations") {
    const DataFrame df = from_text("y,x\n1,2\n3,4\n");
    CHECK_THROWS_AS(fit_ols(build_model_frame(df, parse_formula("y ~ x"))),
                    InsufficientDataError);
}
