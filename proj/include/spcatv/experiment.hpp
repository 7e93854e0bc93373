#pragma once

// Train/test evaluation of penalised PCA fits and grid selection of penalty
// weights. Jobs run on a fixed pool of worker threads; every job owns its
// data copy and writes into a preassigned slot, so results do not depend on
// the worker count.

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spcatv/metrics.hpp"
#include "spcatv/spca.hpp"
#include "spcatv/synthdata.hpp"

namespace spcatv {

struct EvaluationTask {
  std::string label;
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
  std::optional<Eigen::MatrixXd> V_true;
};

// Contiguous folds; fold f holds rows [f n / folds, (f + 1) n / folds).
std::vector<EvaluationTask> kfold_tasks(const Eigen::MatrixXd& X, int folds,
                                        const std::optional<Eigen::MatrixXd>& V_true = {});
// One task per dataset: first half train, second half test.
std::vector<EvaluationTask> dataset_tasks(const std::vector<SyntheticDataset>& datasets);

struct TaskResult {
  std::string label;
  bool ok = false;
  // Not run, or stopped early, because the candidate already broke the
  // sparsity rule.
  bool rejected = false;
  std::string error;
  double reconstruction_error = 0.0;
  std::optional<double> mse;
  // Share of exact zeros in each loading; missing components count as 1.
  std::vector<double> zero_fraction;
  Eigen::MatrixXd V;
};

struct MethodEvaluation {
  std::string method;
  PenaltyWeights weights;
  std::vector<TaskResult> tasks;
  bool ok = false;  // every task fitted
  double mean_reconstruction_error = 0.0;
  std::optional<double> mean_mse;
  std::optional<StabilityDice> dice;  // needs at least two fitted tasks
};

// Runs fn(0), ..., fn(count - 1) on `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

MethodEvaluation evaluate_method(const std::string& method, const std::vector<EvaluationTask>& tasks,
                                 const GroupLinearOperator& op, const SpcaOptions& options,
                                 int workers);

struct GridSpec {
  std::vector<double> global_weights{0.01, 0.1, 1.0, 10.0};
  std::vector<double> ratios{0.0, 0.1, 0.33, 0.5, 0.8};
};

// Weight combinations with l1_ratio + tv_ratio < 1. With include_tv false the
// tv ratio is fixed to 0; with true only tv_ratio > 0 is enumerated.
std::vector<PenaltyWeights> penalty_grid(const GridSpec& grid, bool include_tv);

// At least half of the features of components 2 and 3 are exactly zero in
// every task.
bool meets_sparsity_rule(const MethodEvaluation& evaluation);

// Share of exact zeros in a loading.
double zero_fraction(const Eigen::VectorXd& v);

struct TuningResult {
  std::vector<MethodEvaluation> candidates;
  // Index of the admissible candidate with the lowest mean test
  // reconstruction error; empty when nothing is admissible. A candidate's
  // tasks run in order and stop at the first component that breaks the
  // sparsity rule, which leaves the selection unchanged.
  std::optional<std::size_t> best;
};

TuningResult tune_weights(const std::string& method, const std::vector<EvaluationTask>& tasks,
                          const GroupLinearOperator& op, const std::vector<PenaltyWeights>& grid,
                          const SpcaOptions& options, int workers);

// Per-task rows, one summary row per method and, for every pair of methods,
// paired differences (first minus second).
void write_report(const std::filesystem::path& path, const std::vector<MethodEvaluation>& methods);

}  // namespace spcatv
