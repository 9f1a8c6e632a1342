#pragma once

#include "lmx/lmm.hpp"

namespace lmx {

struct LrtResult {
    std::size_t null_n_params = 0, full_n_params = 0;
    double null_aic = 0.0, full_aic = 0.0;
    double null_bic = 0.0, full_bic = 0.0;
    double null_log_likelihood = 0.0, full_log_likelihood = 0.0;
    double chisq = 0.0;
    std::size_t chi_df = 0;
    double p_value = 1.0;
    bool nesting_warning = false;  // fixed terms of null not a subset of full
};

// Likelihood-ratio test of two nested ML fits sharing the random structure.
LrtResult lrt_compare(const LmmFit& null_fit, const LmmFit& full_fit);

}  // namespace lmx
