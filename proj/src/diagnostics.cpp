#include "lmx/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmx/errors.hpp"
#include "lmx/numstat.hpp"

namespace lmx {

namespace {

PlotSeries scatter_from(const Eigen::VectorXd& fitted, const Eigen::VectorXd& residuals) {
    PlotSeries s;
    s.kind = PlotSeries::Kind::Scatter;
    s.x_label = "fitted";
    s.y_label = "residuals";
    for (Eigen::Index i = 0; i < fitted.size(); ++i) s.points.emplace_back(fitted[i], residuals[i]);
    return s;
}

}  // namespace

PlotSeries residual_fitted(const OlsFit& fit) { return scatter_from(fit.fitted, fit.residuals); }
PlotSeries residual_fitted(const LmmFit& fit) { return scatter_from(fit.fitted, fit.residuals); }

std::size_t sturges_bins(std::size_t n) {
    if (n <= 1) return 1;
    return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
}

PlotSeries histogram_residuals(const Eigen::VectorXd& residuals, std::size_t n_bins) {
    if (n_bins < 1) throw DomainError("histogram needs at least one bin");
    if (residuals.size() == 0) throw DataError("no residuals to bin");
    PlotSeries s;
    s.kind = PlotSeries::Kind::Histogram;
    s.x_label = "residuals";
    s.y_label = "count";
    const double lo = residuals.minCoeff();
    const double hi = residuals.maxCoeff();
    const double width = hi > lo ? (hi - lo) / static_cast<double>(n_bins) : 1.0;
    for (std::size_t b = 0; b <= n_bins; ++b)
        s.bin_edges.push_back(lo + width * static_cast<double>(b));
    s.bin_counts.assign(n_bins, 0);
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        auto b = static_cast<std::size_t>((residuals[i] - lo) / width);
        if (b >= n_bins) b = n_bins - 1;  // right edge of the last bin is inclusive
        ++s.bin_counts[b];
    }
    return s;
}

PlotSeries qq_points(const Eigen::VectorXd& residuals) {
    const auto n = static_cast<std::size_t>(residuals.size());
    if (n < 2) throw InsufficientDataError("Q-Q plot needs at least two residuals");
    std::vector<double> sorted(residuals.data(), residuals.data() + n);
    std::sort(sorted.begin(), sorted.end());
    PlotSeries s;
    s.kind = PlotSeries::Kind::Qq;
    s.x_label = "theoretical quantiles";
    s.y_label = "sample quantiles";
    const double dn = static_cast<double>(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double di = static_cast<double>(i);
        const double pos = n <= 10 ? (di - 0.375) / (dn + 0.25) : (di - 0.5) / dn;
        s.points.emplace_back(numstat::normal_quantile(pos), sorted[i - 1]);
    }
    return s;
}

namespace {

ModelFrame drop_row(const ModelFrame& frame, std::size_t i) {
    ModelFrame out = frame;
    const auto n = frame.n();
    const auto idx = static_cast<Eigen::Index>(i);
    auto erase_row = [idx, n](Eigen::MatrixXd& m) {
        Eigen::MatrixXd r(static_cast<Eigen::Index>(n - 1), m.cols());
        r.topRows(idx) = m.topRows(idx);
        r.bottomRows(r.rows() - idx) = m.bottomRows(r.rows() - idx);
        m = std::move(r);
    };
    Eigen::VectorXd y(static_cast<Eigen::Index>(n - 1));
    y.head(idx) = frame.y.head(idx);
    y.tail(y.size() - idx) = frame.y.tail(y.size() - idx);
    out.y = std::move(y);
    erase_row(out.X);
    for (auto& blk : out.z_blocks) {
        erase_row(blk.Z);
        // prune groups emptied by the drop so Lambda stays identifiable
        std::vector<Eigen::Index> keep_cols;
        std::vector<std::string> keep_labels;
        for (std::size_t g = 0; g < blk.n_groups; ++g) {
            const auto c0 = static_cast<Eigen::Index>(g * blk.q);
            if (blk.Z.col(c0).cwiseAbs().sum() > 0.0) {
                for (std::size_t k = 0; k < blk.q; ++k)
                    keep_cols.push_back(c0 + static_cast<Eigen::Index>(k));
                keep_labels.push_back(blk.group_labels[g]);
            }
        }
        if (keep_labels.size() != blk.n_groups) {
            Eigen::MatrixXd z(blk.Z.rows(), static_cast<Eigen::Index>(keep_cols.size()));
            for (std::size_t c = 0; c < keep_cols.size(); ++c)
                z.col(static_cast<Eigen::Index>(c)) = blk.Z.col(keep_cols[c]);
            blk.Z = std::move(z);
            blk.group_labels = std::move(keep_labels);
            blk.n_groups = blk.group_labels.size();
        }
    }
    out.kept_rows.erase(out.kept_rows.begin() + static_cast<std::ptrdiff_t>(i));
    return out;
}

}  // namespace

InfluenceReport dfbeta_ols(const ModelFrame& frame) {
    const auto n = frame.n();
    const auto p = frame.p();
    if (n <= p + 1)
        throw InsufficientDataError("leave-one-out needs more than p + 1 observations");
    const OlsFit full = fit_ols(frame);

    InfluenceReport report;
    report.dfbeta.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        OlsFit loo;
        try {
            loo = fit_ols(drop_row(frame, i));
        } catch (const SingularDesignError& e) {
            throw DataError("design becomes singular in column '" + e.column() +
                            "' after dropping row " + std::to_string(i));
        }
        report.dfbeta.row(static_cast<Eigen::Index>(i)) =
            (full.coefficients - loo.coefficients).transpose();
    }
    report.flags = influence_flags(report, full.coefficients);
    return report;
}

std::vector<InfluenceFlag> influence_flags(const InfluenceReport& report,
                                           const Eigen::VectorXd& coefficients,
                                           double half_magnitude_factor) {
    std::vector<InfluenceFlag> flags;
    for (Eigen::Index i = 0; i < report.dfbeta.rows(); ++i)
        for (Eigen::Index j = 0; j < report.dfbeta.cols(); ++j) {
            const double d = report.dfbeta(i, j);
            const double beta = coefficients[j];
            if (std::abs(d) >= half_magnitude_factor * std::abs(beta))
                flags.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                 "half-magnitude"});
            const double without = beta - d;
            if (beta != 0.0 && without != 0.0 && std::signbit(beta) != std::signbit(without))
                flags.push_back(
                    {static_cast<std::size_t>(i), static_cast<std::size_t>(j), "sign-change"});
        }
    return flags;
}

std::vector<std::optional<double>> loo_fixed_effect(const ModelFrame& frame, bool reml,
                                                    std::size_t coef_index) {
    if (coef_index >= frame.p()) throw DataError("coefficient index out of range");
    fit_lmm(frame, reml);  // the full fit must converge before the loop starts
    std::vector<std::optional<double>> out(frame.n());
    for (std::size_t i = 0; i < frame.n(); ++i) {
        try {
            const LmmFit fit = fit_lmm(drop_row(frame, i), reml);
            out[i] = fit.fixed_estimates[static_cast<Eigen::Index>(coef_index)];
        } catch (const ConvergenceError&) {
            // entry stays empty; callers surface a warning
        }
    }
    return out;
}

CollinearityReport collinearity_report(const ModelFrame& frame, double r_threshold,
                                       double vif_threshold) {
    const auto p = static_cast<Eigen::Index>(frame.p());
    if (p < 3)
        throw InsufficientDataError("collinearity report needs at least two predictor columns");
    const auto n = static_cast<Eigen::Index>(frame.n());
    const Eigen::Index k = p - 1;  // non-intercept columns

    CollinearityReport rep;
    for (Eigen::Index j = 1; j < p; ++j) rep.labels.push_back(frame.x_labels[j]);

    Eigen::MatrixXd C(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd col = frame.X.col(j + 1);
        col.array() -= col.mean();
        const double norm = col.norm();
        if (norm == 0.0)
            throw DataError("column '" + rep.labels[static_cast<std::size_t>(j)] +
                            "' is constant; correlation undefined");
        C.col(j) = col / norm;
    }
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a + 1; b < k; ++b) {
            const double r = C.col(a).dot(C.col(b));
            rep.pairs.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), r,
                                 std::abs(r) >= r_threshold});
        }

    if (static_cast<std::size_t>(n) > frame.p()) {
        for (Eigen::Index j = 0; j < k; ++j) {
            // regress column j on the intercept and the other predictors
            Eigen::MatrixXd other(n, p - 1);
            other.col(0).setOnes();
            Eigen::Index c = 1;
            for (Eigen::Index b = 0; b < k; ++b)
                if (b != j) other.col(c++) = frame.X.col(b + 1);
            const Eigen::VectorXd target = frame.X.col(j + 1);
            const Eigen::VectorXd beta =
                other.colPivHouseholderQr().solve(target);
            const double rss = (target - other * beta).squaredNorm();
            const double tss = (target.array() - target.mean()).matrix().squaredNorm();
            const double r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
            const double vif = r2 < 1.0 ? 1.0 / (1.0 - r2) : std::numeric_limits<double>::infinity();
            rep.vif.push_back(vif);
            rep.vif_flagged.push_back(vif >= vif_threshold);
        }
    }
    return rep;
}

std::string plot_series_csv(const PlotSeries& series) {
    std::ostringstream os;
    os.precision(12);
    if (series.kind == PlotSeries::Kind::Histogram) {
        os << "edge,count\n";
        for (std::size_t b = 0; b < series.bin_counts.size(); ++b)
            os << series.bin_edges[b] << ',' << series.bin_counts[b] << '\n';
        os << series.bin_edges.back() << ",0\n";
    } else {
        os << series.x_label << ',' << series.y_label << '\n';
        for (const auto& [x, y] : series.points) os << x << ',' << y << '\n';
    }
    return os.str();
}

namespace {

struct SvgMapper {
    double xmin, xmax, ymin, ymax;
    static constexpr double kW = 640.0, kH = 480.0, kPad = 50.0;

    double sx(double x) const {
        return kPad + (x - xmin) / (xmax > xmin ? xmax - xmin : 1.0) * (kW - 2 * kPad);
    }
    double sy(double y) const {
        return kH - kPad - (y - ymin) / (ymax > ymin ? ymax - ymin : 1.0) * (kH - 2 * kPad);
    }
};

}  // namespace

std::string plot_series_svg(const PlotSeries& series) {
    std::ostringstream os;
    os.precision(8);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
          "viewBox=\"0 0 640 480\">\n";
    os << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";

    if (series.kind == PlotSeries::Kind::Histogram) {
        const double xmin = series.bin_edges.front();
        const double xmax = series.bin_edges.back();
        std::size_t cmax = 1;
        for (auto c : series.bin_counts) cmax = std::max(cmax, c);
        SvgMapper m{xmin, xmax, 0.0, static_cast<double>(cmax)};
        for (std::size_t b = 0; b < series.bin_counts.size(); ++b) {
            const double x0 = m.sx(series.bin_edges[b]);
            const double x1 = m.sx(series.bin_edges[b + 1]);
            const double y = m.sy(static_cast<double>(series.bin_counts[b]));
            os << "<rect x=\"" << x0 << "\" y=\"" << y << "\" width=\"" << x1 - x0
               << "\" height=\"" << m.sy(0.0) - y
               << "\" fill=\"steelblue\" stroke=\"black\"/>\n";
        }
        os << "<text x=\"320\" y=\"470\" text-anchor=\"middle\">" << series.x_label
           << "</text>\n";
        os << "<text x=\"15\" y=\"240\" text-anchor=\"middle\" transform=\"rotate(-90 15 240)\">"
           << series.y_label << "</text>\n";
    } else {
        double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
        bool first = true;
        for (const auto& [x, y] : series.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        SvgMapper m{xmin, xmax, ymin, ymax};
        for (const auto& [x, y] : series.points)
            os << "<circle cx=\"" << m.sx(x) << "\" cy=\"" << m.sy(y)
               << "\" r=\"3\" fill=\"black\"/>\n";
        os << "<text x=\"320\" y=\"470\" text-anchor=\"middle\">" << series.x_label
           << "</text>\n";
        os << "<text x=\"15\" y=\"240\" text-anchor=\"middle\" transform=\"rotate(-90 15 240)\">"
           << series.y_label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace lmx
