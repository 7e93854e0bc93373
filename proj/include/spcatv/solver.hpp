#pragma once

// Loading-vector update for a fixed component u. With b = X^T u / (n lambda_2)
// the problem is rescaled by 1/lambda_2 so that the loss is strongly convex:
//
//   f(v)    = 1/2 ||v - b||^2 + 1/2 ||v||^2 + gamma s(v)    + kappa ||v||_1
//   f_mu(v) = 1/2 ||v - b||^2 + 1/2 ||v||^2 + gamma s_mu(v) + kappa ||v||_1
//
// with gamma = lambda / lambda_2 and kappa = lambda_1 / lambda_2. The smooth
// part is minimised by FISTA and the smoothing is driven to zero by CONESTA,
// a continuation that certifies every level with a Fenchel duality gap.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "spcatv/error.hpp"
#include "spcatv/penalty.hpp"
#include "spcatv/structure.hpp"

namespace spcatv {

// Holds a reference to the operator, which must outlive the problem.
class RidgeSmoothedProblem {
 public:
  RidgeSmoothedProblem(Eigen::VectorXd target, PenaltyWeights weights,
                       const GroupLinearOperator& op);
  // target = X^T u / (n lambda_2) with n = X.rows().
  static RidgeSmoothedProblem from_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                                        const PenaltyWeights& weights,
                                        const GroupLinearOperator& op);

  const Eigen::VectorXd& target() const { return target_; }
  const PenaltyWeights& weights() const { return weights_; }
  const GroupLinearOperator& op() const { return *op_; }
  Index size() const { return target_.size(); }

  double smoothing_weight() const { return weights_.tv_scaled(); }  // gamma
  double l1_weight() const { return weights_.l1_scaled(); }         // kappa
  // M = p / 2, the bound on ||alpha||^2 / 2 over the dual ball product.
  double dual_ball_bound() const { return 0.5 * static_cast<double>(size()); }
  double lipschitz(double mu) const;

  // Non-smoothed objective f(v).
  double objective(const Eigen::VectorXd& v) const;
  double smoothed_objective(const Eigen::VectorXd& v, double mu) const;

 private:
  Eigen::VectorXd target_;
  PenaltyWeights weights_;
  const GroupLinearOperator* op_;
};

struct ContinuationRecord {
  int continuation = 0;
  double mu = 0.0;
  double eps = 0.0;        // prescribed precision for this level
  double eps_mu = 0.0;     // FISTA target, eps - mu gamma M (possibly clamped)
  bool clamped = false;    // eps_mu was non-positive and replaced by eps / 2
  int fista_iterations = 0;
  double gap = 0.0;        // smoothed gap at the FISTA output
  double objective = 0.0;  // f at the FISTA output
  double eps_bound = 0.0;  // gap + mu gamma M, bound on the non-smoothed gap
};

struct SolverTrace {
  double initial_gap = 0.0;  // Gap_{mu=1e-8}(v0)
  std::vector<ContinuationRecord> records;
};

// CSV header: continuation,mu,eps,eps_mu,fista_iters,gap,objective
void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace);

class SolverDiverged : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

class ContinuationLimitExceeded : public ConvergenceError {
 public:
  ContinuationLimitExceeded(const std::string& what, SolverTrace trace)
      : ConvergenceError(what), trace_(std::move(trace)) {}
  const SolverTrace& trace() const { return trace_; }

 private:
  SolverTrace trace_;
};

// sign(v_j) max(|v_j| - t, 0).
Eigen::VectorXd prox_l1(const Eigen::VectorXd& v, double t);

// f_mu(v) + L*(sigma) + psi_mu*(-sigma) with sigma = v - b. Upper-bounds
// f_mu(v) - min f_mu and vanishes at the smoothed minimiser.
double duality_gap(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v, double mu);

struct FistaOptions {
  int max_iterations = 10000;
  // Gap checks every iteration up to this size, every gap_stride iterations
  // above it. The returned iterate is always checked.
  Index dense_gap_limit = 10000;
  int gap_stride = 10;
};

struct FistaResult {
  Eigen::VectorXd v;
  int iterations = 0;
  double gap = 0.0;
  bool converged = false;
};

// Accelerated proximal gradient on f_mu with step 1/L(mu); stops once
// duality_gap <= eps_mu. Throws SolverDiverged on non-finite values.
FistaResult fista(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v0, double eps_mu,
                  double mu, const FistaOptions& options = {});

// Smoothing parameter minimising the FISTA iteration bound for a target
// precision eps. Falls back to kMinMu when there is nothing to smooth.
inline constexpr double kMinMu = 1e-8;
double mu_opt(double eps, const RidgeSmoothedProblem& problem);

struct ConestaOptions {
  double tau = 0.5;
  int max_continuations = 100;
  FistaOptions fista;
  // Starting point; zero when empty.
  std::optional<Eigen::VectorXd> v0;
};

struct ConestaResult {
  Eigen::VectorXd v;
  SolverTrace trace;
  // Gap_{mu}(v) + mu gamma M at the returned v; at most eps.
  double certified_gap = 0.0;
};

// Throws ContinuationLimitExceeded (carrying the trace) when the precision is
// not reached within max_continuations.
ConestaResult conesta(const RidgeSmoothedProblem& problem, double eps,
                      const ConestaOptions& options = {});

}  // namespace spcatv
