#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spcatv/spca.hpp"

namespace spcatv {

// ||X_test - reconstruction_from(model, transform(model, X_test))||_F
double reconstruction_error(const Eigen::MatrixXd& X_test, const SpcaModel& model);

struct MatchResult {
  // permutation[i] = reference column matched to estimated column i, or -1
  // when the estimate has more columns than the reference.
  std::vector<Index> permutation;
  std::vector<int> signs;  // sign of the matched cosine, +1 for zero
  double score = 0.0;      // sum of matched |cosine|
  bool size_mismatch = false;
};

// Assignment maximising the summed absolute cosine similarity.
MatchResult match_components(const Eigen::MatrixXd& V_est, const Eigen::MatrixXd& V_ref);

// Mean squared difference over components and features after matching, sign
// alignment and scaling both sides to unit norm. Unmatched or zero estimates
// count as all-zero loadings.
double loading_mse(const Eigen::MatrixXd& V_est, const Eigen::MatrixXd& V_true);

// 2 |S_a & S_b| / (|S_a| + |S_b|) over exact non-zeros; 1 if both are empty.
double dice_index(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct StabilityDice {
  Eigen::VectorXd per_component;
  double overall = 0.0;
};

// Mean pairwise Dice over all fold pairs after matching components.
StabilityDice stability_dice(const std::vector<Eigen::MatrixXd>& loadings);

// Minimum-cost assignment of rows to distinct columns (rows <= cols).
std::vector<Index> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace spcatv
