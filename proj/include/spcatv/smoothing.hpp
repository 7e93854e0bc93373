#pragma once

// Nesterov smoothing of the group penalty s(v) = sum_g ||A_g v||_2:
//   s_mu(v) = max_{alpha in K} alpha^T A v - mu/2 ||alpha||^2
// where K is the product of unit l2 balls, one per group.

#include <Eigen/Dense>
#include <span>

#include "spcatv/penalty.hpp"
#include "spcatv/structure.hpp"

namespace spcatv {

// x if ||x|| <= 1, else x / ||x||.
void project_group_ball(std::span<double> x);
Eigen::VectorXd project_group_ball(const Eigen::VectorXd& x);

// Per-group projection of A_g v / mu onto the unit ball.
Eigen::VectorXd alpha_star(const GroupLinearOperator& op, const Eigen::VectorXd& v, double mu);

double tv_value(const GroupLinearOperator& op, const Eigen::VectorXd& v);
double smoothed_value(const GroupLinearOperator& op, const Eigen::VectorXd& v, double mu);
// A^T alpha_star(v).
Eigen::VectorXd smoothed_gradient(const GroupLinearOperator& op, const Eigen::VectorXd& v,
                                  double mu);

// Lipschitz constant of the gradient of the smooth part of the ridge-scaled
// problem: 2 + (lambda / lambda_2) ||A||^2 / mu.
double smooth_part_lipschitz(const GroupLinearOperator& op, double mu,
                             const PenaltyWeights& weights);

struct SmoothedPenalty {
  double value = 0.0;          // s_mu(v)
  double alpha_norm_sq = 0.0;  // ||alpha*||^2
};

// Fills `alpha` (length op.rows()) with alpha_star(v) and returns the value
// and dual norm in the same pass.
SmoothedPenalty evaluate_smoothed(const GroupLinearOperator& op, std::span<const double> v,
                                  double mu, std::span<double> alpha);
// Same, starting from alpha = A v already computed; overwrites it in place.
SmoothedPenalty smooth_image(const GroupLinearOperator& op, double mu, std::span<double> alpha);

}  // namespace spcatv
