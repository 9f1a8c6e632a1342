#include "lmx/inference.hpp"

#include <algorithm>

#include "lmx/errors.hpp"
#include "lmx/numstat.hpp"

namespace lmx {

LrtResult lrt_compare(const LmmFit& null_fit, const LmmFit& full_fit) {
    if (null_fit.reml || full_fit.reml) throw Error("likelihood ratio test requires ML fits");
    if (null_fit.n_obs != full_fit.n_obs)
        throw DataError("models were fit to different numbers of observations (" +
                        std::to_string(null_fit.n_obs) + " vs " +
                        std::to_string(full_fit.n_obs) + ")");
    if (null_fit.frame.kept_rows != full_fit.frame.kept_rows)
        throw DataError("models were fit to different observation sets");
    {
        const auto& a = null_fit.frame.z_blocks;
        const auto& b = full_fit.frame.z_blocks;
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i)
            same = a[i].spec == b[i].spec && a[i].q == b[i].q && a[i].n_groups == b[i].n_groups;
        if (!same) throw DataError("models have different random-effects structures");
    }
    if (null_fit.n_params == full_fit.n_params)
        throw DataError("models have equal parameter counts; nothing to test");
    if (null_fit.n_params > full_fit.n_params)
        throw DataError("null model has more parameters than the full model; swap the arguments");

    LrtResult res;
    res.null_n_params = null_fit.n_params;
    res.full_n_params = full_fit.n_params;
    res.null_aic = null_fit.aic;
    res.full_aic = full_fit.aic;
    res.null_bic = null_fit.bic;
    res.full_bic = full_fit.bic;
    res.null_log_likelihood = null_fit.log_likelihood;
    res.full_log_likelihood = full_fit.log_likelihood;
    res.chi_df = full_fit.n_params - null_fit.n_params;

    for (const auto& lbl : null_fit.fixed_labels)
        if (std::find(full_fit.fixed_labels.begin(), full_fit.fixed_labels.end(), lbl) ==
            full_fit.fixed_labels.end())
            res.nesting_warning = true;

    double chisq = null_fit.criterion - full_fit.criterion;
    if (chisq < 0.0) {
        if (chisq < -1e-6)
            throw DataError("full model fits worse than the null; models are not nested");
        chisq = 0.0;  // optimizer slack
    }
    res.chisq = chisq;
    res.p_value =
        chisq == 0.0 ? 1.0 : numstat::chisq_upper_p(chisq, static_cast<int>(res.chi_df));
    return res;
}

}  // namespace lmx
