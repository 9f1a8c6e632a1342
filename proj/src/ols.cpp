#include "lmx/ols.hpp"

#include <cmath>
#include <limits>

#include "lmx/errors.hpp"
#include "lmx/numstat.hpp"

namespace lmx {

OlsFit fit_ols(const ModelFrame& frame) {
    const auto n = static_cast<Eigen::Index>(frame.n());
    const auto p = static_cast<Eigen::Index>(frame.p());
    if (n <= p)
        throw InsufficientDataError("need more observations (" + std::to_string(n) +
                                    ") than coefficients (" + std::to_string(p) + ")");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(frame.X);
    const auto& R = qr.matrixR();
    const double rmax = std::abs(R(0, 0));
    for (Eigen::Index k = 0; k < p; ++k) {
        if (std::abs(R(k, k)) <= 1e-10 * rmax) {
            // the pivoted-out column is the linearly dependent one
            const auto bad = static_cast<std::size_t>(qr.colsPermutation().indices()[k]);
            throw SingularDesignError(frame.x_labels[bad]);
        }
    }

    OlsFit fit;
    fit.frame = frame;
    fit.coefficients = qr.solve(frame.y);
    fit.fitted = frame.X * fit.coefficients;
    fit.residuals = frame.y - fit.fitted;

    const double rss = fit.residuals.squaredNorm();
    fit.df_resid = static_cast<std::size_t>(n - p);
    fit.sigma = std::sqrt(rss / static_cast<double>(fit.df_resid));
    fit.xtx_inv = (frame.X.transpose() * frame.X).llt().solve(
        Eigen::MatrixXd::Identity(p, p));

    fit.std_errors.resize(p);
    fit.t_values.resize(p);
    fit.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.std_errors[j] = fit.sigma * std::sqrt(fit.xtx_inv(j, j));
        fit.t_values[j] = fit.coefficients[j] / fit.std_errors[j];
        fit.p_values[j] =
            numstat::t_two_sided_p(fit.t_values[j], static_cast<int>(fit.df_resid));
    }

    const double ybar = frame.y.mean();
    const double tss = (frame.y.array() - ybar).matrix().squaredNorm();
    fit.r2 = tss > 0.0 && p > 1 ? 1.0 - rss / tss : 0.0;
    if (p > 1) {
        fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) /
                               static_cast<double>(fit.df_resid);
        fit.f_df1 = static_cast<std::size_t>(p - 1);
        fit.f_df2 = fit.df_resid;
        fit.f_stat = ((tss - rss) / static_cast<double>(fit.f_df1)) /
                     (rss / static_cast<double>(fit.f_df2));
        fit.f_p = numstat::f_upper_p(fit.f_stat, static_cast<int>(fit.f_df1),
                                     static_cast<int>(fit.f_df2));
    } else {
        fit.adj_r2 = 0.0;
        fit.f_stat = std::numeric_limits<double>::quiet_NaN();
        fit.f_p = std::numeric_limits<double>::quiet_NaN();
    }
    return fit;
}

Eigen::VectorXd predict_ols(const OlsFit& fit, const Eigen::MatrixXd& new_x) {
    if (new_x.cols() != fit.coefficients.size())
        throw DataError("prediction matrix has " + std::to_string(new_x.cols()) +
                        " columns, model has " + std::to_string(fit.coefficients.size()));
    return new_x * fit.coefficients;
}

}  // namespace lmx
