#include "lmx/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "lmx/errors.hpp"

namespace lmx {

namespace {

std::size_t theta_length(const ModelFrame& frame) {
    std::size_t len = 0;
    for (const auto& blk : frame.z_blocks) len += blk.q * (blk.q + 1) / 2;
    return len;
}

// Per-random-term relative Cholesky factor (lower triangular, column-major theta
// segment), repeated along the block diagonal for every group.
Eigen::MatrixXd build_lambda(const ThetaVector& theta, const ModelFrame& frame) {
    Eigen::Index m = 0;
    for (const auto& blk : frame.z_blocks) m += static_cast<Eigen::Index>(blk.q * blk.n_groups);
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(m, m);
    std::size_t t = 0;
    Eigen::Index off = 0;
    for (const auto& blk : frame.z_blocks) {
        const auto q = static_cast<Eigen::Index>(blk.q);
        Eigen::MatrixXd fac = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index j = 0; j < q; ++j)
            for (Eigen::Index i = j; i < q; ++i) {
                double v = theta[t++];
                if (i == j) v = std::abs(v);  // mirrored bound keeps the search unconstrained
                fac(i, j) = v;
            }
        for (std::size_t g = 0; g < blk.n_groups; ++g) {
            lam.block(off, off, q, q) = fac;
            off += q;
        }
    }
    return lam;
}

// Sufficient statistics of the frame, shared by every objective evaluation.
struct PlsCache {
    const ModelFrame& frame;
    Eigen::MatrixXd ZtZ, ZtX, XtX;
    Eigen::VectorXd Zty, Xty;
    double yty;

    explicit PlsCache(const ModelFrame& f) : frame(f) {
        Eigen::Index m = 0;
        for (const auto& blk : f.z_blocks) m += blk.Z.cols();
        Eigen::MatrixXd Z(f.y.size(), m);
        Eigen::Index off = 0;
        for (const auto& blk : f.z_blocks) {
            Z.middleCols(off, blk.Z.cols()) = blk.Z;
            off += blk.Z.cols();
        }
        ZtZ = Z.transpose() * Z;
        ZtX = Z.transpose() * f.X;
        XtX = f.X.transpose() * f.X;
        Zty = Z.transpose() * f.y;
        Xty = f.X.transpose() * f.y;
        yty = f.y.squaredNorm();
    }
};

struct PlsSolution {
    double criterion;
    double sigma2;
    Eigen::VectorXd beta;
    Eigen::VectorXd b;           // Lambda u, grouped as Z's columns
    Eigen::MatrixXd cov_beta;    // sigma^2 * S^{-1}
};

PlsSolution solve_pls(const ThetaVector& theta, const PlsCache& c, bool reml) {
    const auto n = static_cast<double>(c.frame.n());
    const auto p = static_cast<double>(c.frame.p());
    const Eigen::MatrixXd lam = build_lambda(theta, c.frame);
    const Eigen::Index m = lam.rows();

    Eigen::MatrixXd A = lam.transpose() * c.ZtZ * lam;
    A.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> lltA(A);
    const Eigen::MatrixXd L = lltA.matrixL();

    const Eigen::MatrixXd RZX =
        L.triangularView<Eigen::Lower>().solve(lam.transpose() * c.ZtX);
    const Eigen::VectorXd cu = L.triangularView<Eigen::Lower>().solve(lam.transpose() * c.Zty);

    const Eigen::MatrixXd S = c.XtX - RZX.transpose() * RZX;
    const Eigen::LLT<Eigen::MatrixXd> lltS(S);
    const Eigen::MatrixXd LS = lltS.matrixL();

    PlsSolution sol;
    sol.beta = lltS.solve(c.Xty - RZX.transpose() * cu);
    const Eigen::VectorXd u =
        L.transpose().triangularView<Eigen::Upper>().solve(cu - RZX * sol.beta);
    sol.b = lam * u;

    // penalized residual sum of squares |y - X beta - Z b|^2 + |u|^2
    const double r2p = c.yty + sol.beta.dot(c.XtX * sol.beta) + sol.b.dot(c.ZtZ * sol.b) +
                       2.0 * sol.b.dot(c.ZtX * sol.beta) - 2.0 * sol.beta.dot(c.Xty) -
                       2.0 * sol.b.dot(c.Zty) + u.squaredNorm();

    double logdet_L = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) logdet_L += std::log(L(i, i));
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (reml) {
        double logdet_LS = 0.0;
        for (Eigen::Index i = 0; i < LS.rows(); ++i) logdet_LS += std::log(LS(i, i));
        sol.criterion =
            2.0 * logdet_L + 2.0 * logdet_LS + (n - p) * (1.0 + std::log(two_pi * r2p / (n - p)));
        sol.sigma2 = r2p / (n - p);
    } else {
        sol.criterion = 2.0 * logdet_L + n * (1.0 + std::log(two_pi * r2p / n));
        sol.sigma2 = r2p / n;
    }
    sol.cov_beta = sol.sigma2 * lltS.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
    return sol;
}

struct NmResult {
    ThetaVector theta;
    double value;
    bool converged;
};

NmResult nelder_mead(const std::function<double(const ThetaVector&)>& f, ThetaVector start,
                     double step, std::size_t max_evals) {
    const std::size_t d = start.size();
    std::vector<ThetaVector> verts(d + 1, start);
    std::vector<double> vals(d + 1);
    std::size_t evals = 0;
    for (std::size_t i = 0; i < d; ++i) verts[i + 1][i] += step;
    for (std::size_t i = 0; i <= d; ++i) {
        vals[i] = f(verts[i]);
        ++evals;
    }

    auto order = [&] {
        std::vector<std::size_t> idx(d + 1);
        for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        std::vector<ThetaVector> nv(d + 1);
        std::vector<double> nf(d + 1);
        for (std::size_t i = 0; i <= d; ++i) {
            nv[i] = verts[idx[i]];
            nf[i] = vals[idx[i]];
        }
        verts = std::move(nv);
        vals = std::move(nf);
    };

    while (evals < max_evals) {
        order();
        double spread = vals[d] - vals[0];
        double diam = 0.0;
        for (std::size_t i = 1; i <= d; ++i)
            for (std::size_t k = 0; k < d; ++k)
                diam = std::max(diam, std::abs(verts[i][k] - verts[0][k]));
        if (spread < 1e-10 && diam < 1e-8) return {verts[0], vals[0], true};

        ThetaVector centroid(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) centroid[k] += verts[i][k] / d;

        auto point = [&](double coef) {
            ThetaVector x(d);
            for (std::size_t k = 0; k < d; ++k)
                x[k] = centroid[k] + coef * (verts[d][k] - centroid[k]);
            return x;
        };

        const ThetaVector xr = point(-1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < vals[0]) {
            const ThetaVector xe = point(-2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                verts[d] = xe;
                vals[d] = fe;
            } else {
                verts[d] = xr;
                vals[d] = fr;
            }
        } else if (fr < vals[d - 1]) {
            verts[d] = xr;
            vals[d] = fr;
        } else {
            const bool outside = fr < vals[d];
            const ThetaVector xc = point(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < (outside ? fr : vals[d])) {
                verts[d] = xc;
                vals[d] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 1; i <= d; ++i) {
                    for (std::size_t k = 0; k < d; ++k)
                        verts[i][k] = verts[0][k] + 0.5 * (verts[i][k] - verts[0][k]);
                    vals[i] = f(verts[i]);
                    ++evals;
                }
            }
        }
    }
    order();
    return {verts[0], vals[0], false};
}

ThetaVector identity_theta(const ModelFrame& frame, double scale) {
    ThetaVector theta(theta_length(frame), 0.0);
    std::size_t t = 0;
    for (const auto& blk : frame.z_blocks)
        for (std::size_t j = 0; j < blk.q; ++j)
            for (std::size_t i = j; i < blk.q; ++i) {
                if (i == j) theta[t] = scale;
                ++t;
            }
    return theta;
}

}  // namespace

double profiled_objective(const ThetaVector& theta, const ModelFrame& frame, bool reml) {
    if (theta.size() != theta_length(frame))
        throw DataError("theta has " + std::to_string(theta.size()) + " entries, expected " +
                        std::to_string(theta_length(frame)));
    const PlsCache cache(frame);
    return solve_pls(theta, cache, reml).criterion;
}

LmmFit fit_lmm(const ModelFrame& frame, bool reml) {
    if (frame.z_blocks.empty()) throw Error("No random effects terms specified in formula");

    const PlsCache cache(frame);
    const auto objective = [&](const ThetaVector& th) {
        return solve_pls(th, cache, reml).criterion;
    };

    NmResult res = nelder_mead(objective, identity_theta(frame, 1.0), 0.5, 10000);
    if (!res.converged) {
        NmResult retry = nelder_mead(objective, identity_theta(frame, 0.1), 0.05, 10000);
        if (retry.value < res.value) res = retry;
        if (!retry.converged)
            throw ConvergenceError("mixed-model optimizer did not converge", res.theta);
    }

    // canonicalize the mirrored diagonal entries
    {
        std::size_t t = 0;
        for (const auto& blk : frame.z_blocks)
            for (std::size_t j = 0; j < blk.q; ++j)
                for (std::size_t i = j; i < blk.q; ++i) {
                    if (i == j) res.theta[t] = std::abs(res.theta[t]);
                    ++t;
                }
    }

    const PlsSolution sol = solve_pls(res.theta, cache, reml);

    LmmFit fit;
    fit.frame = frame;
    fit.reml = reml;
    fit.theta = res.theta;
    fit.criterion = sol.criterion;
    fit.log_likelihood = -0.5 * sol.criterion;
    fit.ml_deviance_at_estimate =
        reml ? solve_pls(res.theta, cache, false).criterion : sol.criterion;
    fit.n_obs = frame.n();
    fit.residual_variance = sol.sigma2;

    fit.fixed_labels = frame.x_labels;
    fit.fixed_estimates = sol.beta;
    const auto p = static_cast<Eigen::Index>(frame.p());
    fit.fixed_std_errors.resize(p);
    fit.fixed_t_values.resize(p);
    fit.fixed_correlation.resize(p, p);
    for (Eigen::Index j = 0; j < p; ++j) fit.fixed_std_errors[j] = std::sqrt(sol.cov_beta(j, j));
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.fixed_t_values[j] = sol.beta[j] / fit.fixed_std_errors[j];
        for (Eigen::Index k = 0; k < p; ++k)
            fit.fixed_correlation(j, k) =
                sol.cov_beta(j, k) / (fit.fixed_std_errors[j] * fit.fixed_std_errors[k]);
    }

    std::size_t t = 0;
    Eigen::Index off = 0;
    for (const auto& blk : frame.z_blocks) {
        const auto q = static_cast<Eigen::Index>(blk.q);
        Eigen::MatrixXd fac = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index j = 0; j < q; ++j)
            for (Eigen::Index i = j; i < q; ++i) fac(i, j) = res.theta[t++];
        const Eigen::MatrixXd cov = sol.sigma2 * fac * fac.transpose();

        VarComp vc;
        vc.grouping = blk.spec.grouping;
        vc.names = blk.column_labels;
        vc.variances = cov.diagonal();
        vc.std_devs = vc.variances.cwiseSqrt();
        vc.correlations.setIdentity(q, q);
        for (Eigen::Index i = 0; i < q; ++i)
            for (Eigen::Index j = 0; j < q; ++j)
                if (i != j && vc.std_devs[i] > 0.0 && vc.std_devs[j] > 0.0)
                    vc.correlations(i, j) = cov(i, j) / (vc.std_devs[i] * vc.std_devs[j]);
        for (Eigen::Index i = 0; i < q; ++i) {
            if (vc.variances[i] < 1e-8 * sol.sigma2) fit.boundary_warning = true;
            for (Eigen::Index j = 0; j < i; ++j)
                if (std::abs(vc.correlations(i, j)) > 0.999) fit.correlation_warning = true;
        }
        fit.varcomps.push_back(std::move(vc));
        fit.group_sizes.push_back(blk.n_groups);

        Eigen::MatrixXd bl(static_cast<Eigen::Index>(blk.n_groups), q);
        for (std::size_t g = 0; g < blk.n_groups; ++g)
            bl.row(static_cast<Eigen::Index>(g)) =
                sol.b.segment(off + static_cast<Eigen::Index>(g * blk.q), q).transpose();
        fit.blups.push_back(std::move(bl));
        off += blk.Z.cols();
    }

    fit.n_params = frame.p() + theta_length(frame) + 1;
    fit.aic = fit.criterion + 2.0 * static_cast<double>(fit.n_params);
    fit.bic = fit.criterion +
              static_cast<double>(fit.n_params) * std::log(static_cast<double>(fit.n_obs));

    Eigen::VectorXd zb = Eigen::VectorXd::Zero(frame.y.size());
    off = 0;
    for (const auto& blk : frame.z_blocks) {
        zb += blk.Z * sol.b.segment(off, blk.Z.cols());
        off += blk.Z.cols();
    }
    fit.fitted = frame.X * sol.beta + zb;
    fit.residuals = frame.y - fit.fitted;
    return fit;
}

std::vector<Eigen::MatrixXd> coef_by_group(const LmmFit& fit) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t s = 0; s < fit.frame.z_blocks.size(); ++s) {
        const auto& blk = fit.frame.z_blocks[s];
        Eigen::MatrixXd tbl =
            fit.fixed_estimates.transpose().replicate(static_cast<Eigen::Index>(blk.n_groups), 1);
        for (std::size_t k = 0; k < blk.q; ++k) {
            const auto it =
                std::find(fit.fixed_labels.begin(), fit.fixed_labels.end(), blk.column_labels[k]);
            if (it == fit.fixed_labels.end()) continue;
            const auto j = static_cast<Eigen::Index>(it - fit.fixed_labels.begin());
            tbl.col(j) += fit.blups[s].col(static_cast<Eigen::Index>(k));
        }
        out.push_back(std::move(tbl));
    }
    return out;
}

}  // namespace lmx
