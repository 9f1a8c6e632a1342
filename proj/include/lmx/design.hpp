#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lmx/dataframe.hpp"
#include "lmx/formula.hpp"

namespace lmx {

// Random-effects block for one RandomSpec: dense n × (q·g) matrix whose
// columns come in per-group runs of q (intercept column then slope columns).
struct ZBlock {
    RandomSpec spec;
    Eigen::MatrixXd Z;
    std::vector<std::string> group_labels;    // g level names
    std::vector<std::string> column_labels;   // q per-group column names
    std::size_t q = 0;
    std::size_t n_groups = 0;
};

struct ModelFrame {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> x_labels;
    std::vector<ZBlock> z_blocks;
    std::vector<std::size_t> kept_rows;  // original row indices
    std::string response;

    std::size_t n() const { return kept_rows.size(); }
    std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
};

// Complete-case model frame with treatment-coded dummies (reference level =
// lexicographically first) and interaction columns as elementwise products.
ModelFrame build_model_frame(const DataFrame& df, const FormulaAst& ast);

}  // namespace lmx
