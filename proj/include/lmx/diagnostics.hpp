#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lmx/lmm.hpp"
#include "lmx/ols.hpp"

namespace lmx {

struct PlotSeries {
    enum class Kind { Scatter, Histogram, Qq } kind;
    std::vector<std::pair<double, double>> points;  // scatter/qq: (x, y)
    std::vector<double> bin_edges;                  // histogram: n_bins + 1 edges
    std::vector<std::size_t> bin_counts;
    std::string x_label, y_label;
};

struct InfluenceFlag {
    std::size_t row;          // index into kept rows
    std::size_t coefficient;  // column index
    std::string reason;       // "half-magnitude" or "sign-change"
};

struct InfluenceReport {
    Eigen::MatrixXd dfbeta;  // n x p, full-fit coefficient minus leave-one-out
    std::vector<InfluenceFlag> flags;
};

struct CollinearityPair {
    std::size_t col_a, col_b;
    double pearson_r;
    bool flagged;  // |r| >= threshold
};

struct CollinearityReport {
    std::vector<std::string> labels;  // non-intercept column labels
    std::vector<CollinearityPair> pairs;
    std::vector<double> vif;
    std::vector<bool> vif_flagged;
};

PlotSeries residual_fitted(const OlsFit& fit);
PlotSeries residual_fitted(const LmmFit& fit);

std::size_t sturges_bins(std::size_t n);
PlotSeries histogram_residuals(const Eigen::VectorXd& residuals, std::size_t n_bins);

// Sorted residuals against normal quantiles at plotting positions
// (i - 3/8)/(n + 1/4) for n <= 10, otherwise (i - 1/2)/n.
PlotSeries qq_points(const Eigen::VectorXd& residuals);

// DFbeta by n literal leave-one-out refits; flags filled with default thresholds.
InfluenceReport dfbeta_ols(const ModelFrame& frame);

std::vector<InfluenceFlag> influence_flags(const InfluenceReport& report,
                                           const Eigen::VectorXd& coefficients,
                                           double half_magnitude_factor = 0.5);

// Leave-one-out refits of a mixed model, tracking one fixed-effect column;
// entries are empty where the refit failed to converge.
std::vector<std::optional<double>> loo_fixed_effect(const ModelFrame& frame, bool reml,
                                                    std::size_t coef_index);

CollinearityReport collinearity_report(const ModelFrame& frame, double r_threshold = 0.8,
                                       double vif_threshold = 5.0);

// CSV / SVG serialization (640x480 viewport).
std::string plot_series_csv(const PlotSeries& series);
std::string plot_series_svg(const PlotSeries& series);

}  // namespace lmx
