#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lmx/design.hpp"

namespace lmx {

struct OlsFit {
    ModelFrame frame;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_values;
    Eigen::VectorXd p_values;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd xtx_inv;  // (X'X)^-1, reused by diagnostics
    double sigma = 0.0;       // residual standard error
    std::size_t df_resid = 0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double f_stat = 0.0;      // NaN for intercept-only models
    std::size_t f_df1 = 0, f_df2 = 0;
    double f_p = 1.0;
};

// Least squares via column-pivoted QR; rank deficiency raises
// SingularDesignError naming the offending column.
OlsFit fit_ols(const ModelFrame& frame);

Eigen::VectorXd predict_ols(const OlsFit& fit, const Eigen::MatrixXd& new_x);

}  // namespace lmx
