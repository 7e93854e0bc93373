#pragma once

// Structured sparse PCA: rank-1 components extracted one at a time by
// alternating an explicit update of the unit-norm component u with a CONESTA
// solve for the loading v, followed by deflation X <- X - u v^T. The loading
// is not normalised; its scale plays the role of the singular value.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

#include "spcatv/penalty.hpp"
#include "spcatv/solver.hpp"
#include "spcatv/structure.hpp"

namespace spcatv {

class DegenerateLoading : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpcaOptions {
  int components = 1;
  PenaltyWeights weights;
  double eps = 1e-4;
  std::uint64_t seed = 0;
  int max_alternations = 100;
  // Remove (and store) column means before fitting.
  bool center = true;
  FistaOptions fista;
  int max_continuations = 100;
  // Called after each extracted component (0-based index, loading); returning
  // false stops the fit and marks the model as aborted.
  std::function<bool(Index, const Eigen::VectorXd&)> accept_component;
};

struct ComponentFit {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  std::vector<SolverTrace> traces;  // one CONESTA trace per alternation
  int alternations = 0;
  bool converged = false;
  // The loading collapsed to zero (or X v = 0); u and v are not usable.
  bool exhausted = false;
};

struct SpcaModel {
  Eigen::MatrixXd U;                   // n x K, unit columns
  Eigen::MatrixXd V;                   // p x K loadings
  Eigen::VectorXd means;               // p column means removed before fitting
  Eigen::VectorXd explained_variance;  // K, share of ||X_0||_F^2 removed by each deflation
  Eigen::VectorXd residual_energy;     // K + 1, ||X_k||_F^2
  std::vector<std::vector<SolverTrace>> traces;
  PenaltyWeights weights;
  double eps = 0.0;
  std::uint64_t seed = 0;
  int requested_components = 0;
  // Fewer than requested_components were extracted.
  bool truncated = false;
  // accept_component rejected the last stored component.
  bool aborted = false;

  Index components() const { return V.cols(); }
  Index features() const { return V.rows(); }

  // K = 0 model with zero means.
  static SpcaModel empty(Index features);
};

// X v / ||X v||. Throws DegenerateLoading when X v = 0.
Eigen::VectorXd update_u(const Eigen::MatrixXd& X, const Eigen::VectorXd& v);

ComponentFit fit_component(const Eigen::MatrixXd& X, const GroupLinearOperator& op,
                           const PenaltyWeights& weights, double eps, std::uint64_t seed,
                           const SpcaOptions& options = {});

// X - u v^T
Eigen::MatrixXd deflate(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& v);

SpcaModel fit(const Eigen::MatrixXd& X, const GroupLinearOperator& op, const SpcaOptions& options);

// Sequential projection mirroring the training deflation: after centering,
// s_k = X v_k / ||v_k||^2 and X <- X - s_k v_k^T. Returns n_new x K scores.
Eigen::MatrixXd transform(const SpcaModel& model, const Eigen::MatrixXd& X_new);

// sum_k s_k v_k^T plus the stored column means.
Eigen::MatrixXd reconstruction_from(const SpcaModel& model, const Eigen::MatrixXd& scores);

// Directory with U.csv, V.csv, means.csv, meta.json and traces/.
void save_model(const std::filesystem::path& dir, const SpcaModel& model);
SpcaModel load_model(const std::filesystem::path& dir);

}  // namespace spcatv
