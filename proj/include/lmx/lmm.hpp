#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lmx/design.hpp"

namespace lmx {

// Relative Cholesky factor entries, one segment of q(q+1)/2 reals per
// random spec, lower triangle in column-major order, diagonals >= 0.
using ThetaVector = std::vector<double>;

struct VarComp {
    std::string grouping;
    std::vector<std::string> names;   // "(Intercept)", slope labels
    Eigen::VectorXd variances;        // response units squared
    Eigen::VectorXd std_devs;
    Eigen::MatrixXd correlations;     // q x q, identity diagonal
};

struct LmmFit {
    ModelFrame frame;
    std::vector<std::string> fixed_labels;
    Eigen::VectorXd fixed_estimates;
    Eigen::VectorXd fixed_std_errors;
    Eigen::VectorXd fixed_t_values;
    Eigen::MatrixXd fixed_correlation;
    std::vector<VarComp> varcomps;
    double residual_variance = 0.0;
    std::vector<Eigen::MatrixXd> blups;  // per spec: n_groups x q
    ThetaVector theta;
    double criterion = 0.0;              // -2 logLik of the objective used
    double log_likelihood = 0.0;
    double ml_deviance_at_estimate = 0.0;
    double aic = 0.0, bic = 0.0;
    std::size_t n_obs = 0;
    std::vector<std::size_t> group_sizes;
    bool reml = true;
    std::size_t n_params = 0;
    Eigen::VectorXd fitted;              // X beta + Z b
    Eigen::VectorXd residuals;
    bool boundary_warning = false;       // a variance estimated at ~0
    bool correlation_warning = false;    // a random-effect correlation near +-1
};

// Profiled ML/REML deviance at theta: beta and sigma^2 eliminated
// analytically, random effects solved by penalized least squares.
double profiled_objective(const ThetaVector& theta, const ModelFrame& frame, bool reml);

// Minimizes profiled_objective over theta by Nelder-Mead and assembles the
// full fit. Throws Error when the frame has no random specs,
// ConvergenceError (with the best theta seen) on optimizer failure.
LmmFit fit_lmm(const ModelFrame& frame, bool reml);

// Per-group coefficient tables: one n_groups x p matrix per random spec,
// fixed estimates with the spec's BLUP columns added.
std::vector<Eigen::MatrixXd> coef_by_group(const LmmFit& fit);

}  // namespace lmx
