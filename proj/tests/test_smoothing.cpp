#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spcatv/smoothing.hpp"

using namespace spcatv;

TEST_SUITE("smoothing") {
  TEST_CASE("projection onto the unit ball") {
    CHECK(project_group_ball(Eigen::Vector3d(0.3, 0.4, 0.0)) == Eigen::VectorXd(Eigen::Vector3d(0.3, 0.4, 0.0)));
    const Eigen::VectorXd p = project_group_ball(Eigen::Vector3d(3.0, 4.0, 0.0));
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.8));
    CHECK(project_group_ball(Eigen::Vector3d::Zero()).isZero(0.0));
    CHECK(project_group_ball(Eigen::VectorXd::Constant(1, -2.0))[0] == -1.0);
  }

  TEST_CASE("alpha star limits") {
    const auto op = build_grid_tv_operator(GridMask::full(4, 4));
    std::mt19937_64 rng(5);
    const Eigen::VectorXd v = oracle::normal_vector(rng, 16);
    CHECK(alpha_star(op, Eigen::VectorXd::Zero(16), 0.1).isZero(0.0));

    const Eigen::VectorXd av = op.apply(v);
    double max_norm = 0.0;
    for (Index g = 0; g < op.group_count(); ++g) {
      const auto grp = op.group(g);
      max_norm = std::max(max_norm, av.segment(grp.row_offset, grp.rows).norm());
    }
    const double big = 2.0 * max_norm;
    CHECK((alpha_star(op, v, big) - av / big).norm() <= 1e-15);

    const Eigen::VectorXd tiny = alpha_star(op, v, 1e-12);
    for (Index g = 0; g < op.group_count(); ++g) {
      const auto grp = op.group(g);
      if (grp.rows == 0) continue;
      const Eigen::VectorXd ag = av.segment(grp.row_offset, grp.rows);
      CHECK((tiny.segment(grp.row_offset, grp.rows) - ag / ag.norm()).norm() <= 1e-12);
    }
    CHECK_THROWS_AS(alpha_star(op, v, 0.0), std::invalid_argument);
  }

  TEST_CASE("alpha slices stay in the ball") {
    const auto op = build_grid_tv_operator(GridMask::full(5, 5, 2));
    std::mt19937_64 rng(6);
    for (double mu : {1.0, 0.1, 0.01}) {
      const Eigen::VectorXd a = alpha_star(op, oracle::normal_vector(rng, op.cols(), 3.0), mu);
      for (Index g = 0; g < op.group_count(); ++g) {
        const auto grp = op.group(g);
        CHECK(a.segment(grp.row_offset, grp.rows).norm() <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("smoothed value cases") {
    const auto op = build_grid_tv_operator(GridMask::full(4, 4));
    CHECK(smoothed_value(op, Eigen::VectorXd::Zero(16), 0.5) == 0.0);
    std::mt19937_64 rng(7);
    const Eigen::VectorXd v = oracle::normal_vector(rng, 16, 0.01);
    const Eigen::VectorXd av = op.apply(v);
    // Every group norm is below mu, so nothing is projected.
    CHECK(smoothed_value(op, v, 10.0) == doctest::Approx(av.squaredNorm() / 20.0).epsilon(1e-13));
    CHECK_THROWS_AS(smoothed_value(op, v, -1.0), std::invalid_argument);
  }

  TEST_CASE("sandwich inequality and monotonicity in mu") {
    const auto op = build_grid_tv_operator(GridMask::full(6, 6));
    const double p = static_cast<double>(op.cols());
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::VectorXd v = oracle::normal_vector(rng, op.cols(), trial % 2 ? 0.05 : 2.0);
      const double s = tv_value(op, v);
      double previous = s;
      for (double mu : {0.01, 0.1, 1.0}) {
        const double s_mu = smoothed_value(op, v, mu);
        CHECK(s_mu <= s + 1e-12);
        CHECK(s <= s_mu + mu * p / 2.0 + 1e-12);
        CHECK(s_mu <= previous + 1e-12);
        previous = s_mu;
      }
    }
  }

  TEST_CASE("gradient matches central differences") {
    const auto op = build_grid_tv_operator(GridMask::full(4, 4));
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd v = oracle::normal_vector(rng, 16);
      const Eigen::VectorXd g = smoothed_gradient(op, v, 0.1);
      const Eigen::VectorXd fd = oracle::central_gradient(
          [&](const Eigen::VectorXd& x) { return smoothed_value(op, x, 0.1); }, v, 1e-6);
      CHECK((g - fd).norm() / std::max(1.0, g.norm()) <= 1e-5);
    }
    CHECK(smoothed_gradient(op, Eigen::VectorXd::Zero(16), 0.1).isZero(0.0));
    CHECK(smoothed_gradient(op, Eigen::VectorXd::Constant(16, 2.0), 0.1).isZero(0.0));
  }

  TEST_CASE("convexity along random segments") {
    const auto op = build_grid_tv_operator(GridMask::full(5, 4));
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd x = oracle::normal_vector(rng, 20);
      const Eigen::VectorXd y = oracle::normal_vector(rng, 20);
      const double t = unit(rng);
      const double mu = trial % 3 == 0 ? 0.01 : 0.5;
      CHECK(smoothed_value(op, t * x + (1 - t) * y, mu) <=
            t * smoothed_value(op, x, mu) + (1 - t) * smoothed_value(op, y, mu) + 1e-12);
    }
  }

  TEST_CASE("Lipschitz constant") {
    const auto chain = build_grid_tv_operator(GridMask::full(4, 1));
    const double n = 2.0 * std::sin(3.0 * std::numbers::pi / 8.0);
    CHECK(smooth_part_lipschitz(chain, 1.0, {0.0, 1.0, 1.0}) == doctest::Approx(2.0 + n * n).epsilon(1e-9));
    CHECK(smooth_part_lipschitz(chain, 1.0, {0.0, 1.0, 1.0}) == doctest::Approx(5.4142).epsilon(1e-4));
    CHECK(smooth_part_lipschitz(chain, 0.3, {0.5, 2.0, 0.0}) == 2.0);
    const double l1 = smooth_part_lipschitz(chain, 0.2, {0.0, 0.5, 1.5}) - 2.0;
    const double l2 = smooth_part_lipschitz(chain, 0.1, {0.0, 0.5, 1.5}) - 2.0;
    CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-14));
    CHECK_THROWS_AS(smooth_part_lipschitz(chain, 1.0, {0.0, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(smooth_part_lipschitz(chain, 0.0, {0.0, 1.0, 1.0}), std::invalid_argument);
  }
}
