#include "spcatv/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace spcatv {
namespace {

void require_positive_mu(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("smoothing parameter mu must be positive");
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

void project_group_ball(std::span<double> x) {
  double sq = 0.0;
  for (double e : x) sq += e * e;
  if (sq <= 1.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& e : x) e *= inv;
}

Eigen::VectorXd project_group_ball(const Eigen::VectorXd& x) {
  Eigen::VectorXd out = x;
  project_group_ball(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

SmoothedPenalty evaluate_smoothed(const GroupLinearOperator& op, std::span<const double> v,
                                  double mu, std::span<double> alpha) {
  require_positive_mu(mu);
  op.apply(v, alpha);
  return smooth_image(op, mu, alpha);
}

SmoothedPenalty smooth_image(const GroupLinearOperator& op, double mu, std::span<double> alpha) {
  require_positive_mu(mu);
  if (alpha.size() != static_cast<std::size_t>(op.rows()))
    throw std::invalid_argument("stacked vector length does not match operator rows");
  const auto offsets = op.row_offsets();
  SmoothedPenalty out;
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    const auto begin = static_cast<std::size_t>(offsets[g]);
    const auto end = static_cast<std::size_t>(offsets[g + 1]);
    if (begin == end) continue;
    double sq = 0.0;
    for (std::size_t r = begin; r < end; ++r) sq += alpha[r] * alpha[r];
    const double norm = std::sqrt(sq);
    // alpha_g = A_g v / max(mu, ||A_g v||); the maximised value is the Huber
    // function of ||A_g v||.
    if (norm <= mu) {
      const double inv = 1.0 / mu;
      for (std::size_t r = begin; r < end; ++r) alpha[r] *= inv;
      out.value += sq / (2.0 * mu);
      out.alpha_norm_sq += sq / (mu * mu);
    } else {
      const double inv = 1.0 / norm;
      for (std::size_t r = begin; r < end; ++r) alpha[r] *= inv;
      out.value += norm - 0.5 * mu;
      out.alpha_norm_sq += 1.0;
    }
  }
  return out;
}

Eigen::VectorXd alpha_star(const GroupLinearOperator& op, const Eigen::VectorXd& v, double mu) {
  Eigen::VectorXd alpha(op.rows());
  evaluate_smoothed(op, view(v), mu,
                    std::span<double>(alpha.data(), static_cast<std::size_t>(alpha.size())));
  return alpha;
}

double tv_value(const GroupLinearOperator& op, const Eigen::VectorXd& v) {
  const Eigen::VectorXd av = op.apply(v);
  const auto offsets = op.row_offsets();
  double total = 0.0;
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    double sq = 0.0;
    for (Index r = offsets[g]; r < offsets[g + 1]; ++r) sq += av[r] * av[r];
    total += std::sqrt(sq);
  }
  return total;
}

double smoothed_value(const GroupLinearOperator& op, const Eigen::VectorXd& v, double mu) {
  Eigen::VectorXd alpha(op.rows());
  return evaluate_smoothed(op, view(v), mu,
                           std::span<double>(alpha.data(), static_cast<std::size_t>(alpha.size())))
      .value;
}

Eigen::VectorXd smoothed_gradient(const GroupLinearOperator& op, const Eigen::VectorXd& v,
                                  double mu) {
  return op.apply_adjoint(alpha_star(op, v, mu));
}

double smooth_part_lipschitz(const GroupLinearOperator& op, double mu,
                             const PenaltyWeights& weights) {
  require_positive_mu(mu);
  if (!(weights.l2 > 0.0))
    throw std::invalid_argument("lambda_2 must be positive (strong convexity is required)");
  if (weights.tv == 0.0) return 2.0;
  return 2.0 + weights.tv_scaled() * op.norm_squared() / mu;
}

}  // namespace spcatv
