#pragma once

#include <cstdint>
#include <vector>

namespace lmx::numstat {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Regularized lower incomplete gamma P(a, x).
double incomplete_gamma_lower(double a, double x);

// Standard normal CDF.
double normal_cdf(double x);

// Two-sided tail probability P(|T_df| >= |t|) of Student's t.
double t_two_sided_p(double t, int df);

// Upper tail P(F >= f) of the F distribution.
double f_upper_p(double f, int df1, int df2);

// Upper tail P(chi2_df >= x).
double chisq_upper_p(double x, int df);

// Inverse standard normal CDF, accurate to ~1e-9 on (1e-12, 1-1e-12).
double normal_quantile(double p);

// Seedable 64-bit xorshift* generator with Box-Muller normal deviates.
// Identical seeds yield identical streams; copying forks the stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double next_uniform();  // in (0, 1)
    double next_normal();
    std::vector<double> normal(std::size_t n);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lmx::numstat
