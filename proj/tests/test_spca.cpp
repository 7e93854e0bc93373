#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "spcatv/metrics.hpp"
#include "spcatv/spca.hpp"
#include "spcatv/synthdata.hpp"

using namespace spcatv;

namespace {

// Ridge weight that makes the loading update v = X^T u exactly.
PenaltyWeights plain_weights(Index n) { return {0.0, 1.0 / (2.0 * static_cast<double>(n)), 0.0}; }

SpcaOptions plain_options(Index n, int components, double eps = 1e-10) {
  SpcaOptions o;
  o.components = components;
  o.weights = plain_weights(n);
  o.eps = eps;
  o.seed = 7;
  o.center = false;
  return o;
}

}  // namespace

TEST_SUITE("spca") {
  TEST_CASE("component update") {
    const Eigen::VectorXd u = update_u(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(2.0, 0.0));
    CHECK(u == Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0)));

    std::mt19937_64 rng(41);
    const Eigen::VectorXd a = oracle::normal_vector(rng, 6);
    const Eigen::VectorXd b = oracle::normal_vector(rng, 4);
    const Eigen::MatrixXd X = a * b.transpose();
    CHECK((update_u(X, 3.0 * b) - a / a.norm()).norm() <= 1e-14);

    const Eigen::MatrixXd R = oracle::normal_matrix(rng, 5, 3);
    CHECK(update_u(R, oracle::normal_vector(rng, 3)).norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(update_u(R, Eigen::VectorXd::Zero(3)), DegenerateLoading);
    CHECK_THROWS_AS(update_u(R, Eigen::VectorXd::Zero(4)), std::invalid_argument);
  }

  TEST_CASE("deflation") {
    std::mt19937_64 rng(42);
    const Eigen::VectorXd u = oracle::normal_vector(rng, 4);
    const Eigen::VectorXd v = oracle::normal_vector(rng, 3);
    CHECK(deflate(u * v.transpose(), u, v).isZero(0.0));
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 4, 3);
    // With v = X^T u for a unit u, <X, u v^T> = ||u v^T||^2.
    const Eigen::VectorXd unit = u.normalized();
    CHECK(deflate(X, unit, X.transpose() * unit).norm() < X.norm());
    CHECK_THROWS_AS(deflate(X, v, v), std::invalid_argument);
  }

  TEST_CASE("zero penalties give the leading singular pair") {
    std::mt19937_64 rng(43);
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 20, 30);
    const ComponentFit c = fit_component(X, GroupLinearOperator::empty(30), plain_weights(20), 1e-10, 1);
    CHECK(c.converged);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CHECK(std::abs(c.u.dot(svd.matrixU().col(0))) >= 0.999);
    CHECK(std::abs(c.v.normalized().dot(svd.matrixV().col(0))) >= 0.999);
    CHECK(c.v.norm() == doctest::Approx(svd.singularValues()[0]).epsilon(1e-6));
  }

  TEST_CASE("rank one data is fitted exactly") {
    std::mt19937_64 rng(44);
    const Eigen::MatrixXd X = oracle::normal_vector(rng, 12) * oracle::normal_vector(rng, 9).transpose();
    const ComponentFit c = fit_component(X, GroupLinearOperator::empty(9), plain_weights(12), 1e-8, 2);
    CHECK((X - c.u * c.v.transpose()).norm() <= 1e-6 * X.norm());
  }

  TEST_CASE("structure must match the data") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 4);
    CHECK_THROWS_AS(fit_component(X, GroupLinearOperator::empty(5), {}, 1e-4, 0), DataError);
    CHECK_THROWS_AS(fit_component(X, GroupLinearOperator::empty(4), {}, 0.0, 0), std::invalid_argument);
  }

  TEST_CASE("explained variance of one component") {
    std::mt19937_64 rng(45);
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 15, 25);
    const SpcaModel m = fit(X, GroupLinearOperator::empty(25), plain_options(15, 1));
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(X).singularValues();
    REQUIRE(m.components() == 1);
    CHECK(m.explained_variance[0] == doctest::Approx(s[0] * s[0] / X.squaredNorm()).epsilon(1e-8));
  }

  TEST_CASE("three components span the leading singular subspace") {
    std::mt19937_64 rng(46);
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 30, 50);
    const SpcaModel m = fit(X, GroupLinearOperator::empty(50), plain_options(30, 3, 1e-12));
    REQUIRE(m.components() == 3);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    const Eigen::MatrixXd Vs = svd.matrixV().leftCols(3);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(m.V).householderQ() *
                              Eigen::MatrixXd::Identity(50, 3);
    const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(Vs.transpose() * Q).singularValues();
    // The smallest cosine gives the largest principal angle.
    CHECK(std::acos(std::min(1.0, cosines.minCoeff())) <= 1e-2);

    for (Index k = 0; k < 3; ++k) CHECK(m.U.col(k).norm() == doctest::Approx(1.0).epsilon(1e-10));
    for (Index k = 0; k < 3; ++k) CHECK(m.residual_energy[k + 1] <= m.residual_energy[k]);

    const Eigen::MatrixXd scores = transform(m, X);
    for (Index k = 0; k < 3; ++k) {
      const double r = scores.col(k).normalized().dot(m.U.col(k));
      CHECK(std::abs(r) >= 0.99);
    }
  }

  TEST_CASE("fits are deterministic") {
    const SyntheticDataset d = generate_dataset(3, 20, 16, 0.5);
    const auto op = build_grid_tv_operator(d.grid());
    SpcaOptions o;
    o.components = 2;
    o.weights = PenaltyWeights::from_ratios(1.0, 0.1, 0.5);
    o.seed = 11;
    const SpcaModel a = fit(d.X, op, o);
    const SpcaModel b = fit(d.X, op, o);
    CHECK(a.V == b.V);
    CHECK(a.U == b.U);
  }

  TEST_CASE("permuting features permutes loadings") {
    std::mt19937_64 rng(47);
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 10, 6);
    Eigen::VectorXi perm(6);
    perm << 3, 0, 5, 1, 4, 2;
    Eigen::MatrixXd Xp(10, 6);
    for (Index j = 0; j < 6; ++j) Xp.col(j) = X.col(perm[j]);
    SpcaOptions o = plain_options(10, 2);
    o.center = true;
    const SpcaModel a = fit(X, GroupLinearOperator::empty(6), o);
    const SpcaModel b = fit(Xp, GroupLinearOperator::empty(6), o);
    for (Index j = 0; j < 6; ++j)
      CHECK((b.V.row(j) - a.V.row(perm[j])).norm() <= 1e-8);
  }

  TEST_CASE("transform and reconstruction") {
    SpcaModel m = SpcaModel::empty(3);
    m.V = Eigen::MatrixXd(3, 1);
    m.V << 1.0, 2.0, 2.0;
    m.U = Eigen::MatrixXd::Ones(1, 1);
    CHECK(transform(m, Eigen::MatrixXd::Zero(2, 3)).isZero(0.0));
    const Eigen::MatrixXd row = 2.5 * m.V.transpose();
    CHECK(transform(m, row)(0, 0) == doctest::Approx(2.5));
    CHECK(reconstruction_from(m, Eigen::MatrixXd::Zero(4, 1)).isZero(0.0));
    CHECK((reconstruction_from(m, transform(m, row)) - row).norm() <= 1e-14);
    CHECK_THROWS_AS(reconstruction_from(m, Eigen::MatrixXd::Zero(4, 2)), std::invalid_argument);
    CHECK_THROWS_AS(transform(m, Eigen::MatrixXd::Zero(1, 4)), DataError);

    m.V.col(0).setZero();
    CHECK(transform(m, row).isZero(0.0));
  }

  TEST_CASE("strong penalties exhaust the model") {
    const SyntheticDataset d = generate_dataset(5, 20, 16, 0.1);
    SpcaOptions o;
    o.components = 3;
    o.weights = {1e3, 1.0, 0.0};
    const SpcaModel m = fit(d.X, GroupLinearOperator::empty(d.features()), o);
    CHECK(m.truncated);
    CHECK(m.components() == 0);
    // Only the means remain.
    CHECK(reconstruction_error(d.X, m) == doctest::Approx((d.X.rowwise() - d.X.colwise().mean()).norm()));
  }

  TEST_CASE("component filter aborts the fit") {
    const SyntheticDataset d = generate_dataset(6, 20, 16, 0.5);
    SpcaOptions o = plain_options(20, 3, 1e-6);
    o.accept_component = [](Index k, const Eigen::VectorXd&) { return k < 1; };
    const SpcaModel m = fit(d.X, GroupLinearOperator::empty(d.features()), o);
    CHECK(m.aborted);
    CHECK(m.components() == 2);
  }

  TEST_CASE("simulated dots are recovered") {
    const SyntheticDataset d = generate_dataset(1, 100, 20, 1.0);
    const auto op = build_grid_tv_operator(d.grid());
    const Eigen::MatrixXd train = d.train().rowwise() - d.train().colwise().mean();
    const ComponentFit c = fit_component(train, op, PenaltyWeights::from_ratios(0.05, 0.6, 0.2), 1e-4, 3);
    REQUIRE_FALSE(c.exhausted);
    const MatchResult first = match_components(c.v, d.V_true);
    CHECK(dice_index(c.v, d.V_true.col(first.permutation[0])) > 0.5);

    SpcaOptions o;
    o.components = 3;
    o.weights = PenaltyWeights::from_ratios(0.05, 0.4, 0.4);
    o.seed = 3;
    const SpcaModel m = fit(d.train(), op, o);
    REQUIRE(m.components() == 3);
    const MatchResult match = match_components(m.V, d.V_true);
    // Deflation moves each later component to a different dot pattern.
    CHECK(match.permutation[0] != match.permutation[1]);
    CHECK(match.permutation[1] != match.permutation[2]);
    CHECK(match.permutation[0] != match.permutation[2]);
  }

  TEST_CASE("model persistence") {
    const auto dir = std::filesystem::temp_directory_path() / "spcatv_model_roundtrip";
    std::filesystem::remove_all(dir);
    std::mt19937_64 rng(48);
    const Eigen::MatrixXd X = oracle::normal_matrix(rng, 8, 5);
    SpcaOptions o = plain_options(8, 2, 1e-6);
    o.center = true;
    const SpcaModel m = fit(X, GroupLinearOperator::empty(5), o);
    save_model(dir, m);
    const SpcaModel r = load_model(dir);
    CHECK(r.V == m.V);
    CHECK(r.U == m.U);
    CHECK(r.means == m.means);
    CHECK(r.weights == m.weights);
    CHECK(r.explained_variance == m.explained_variance);
    CHECK(std::filesystem::exists(dir / "traces" / "component_1_alternation_1.csv"));

    save_model(dir, SpcaModel::empty(5));
    CHECK(load_model(dir).components() == 0);
    std::filesystem::remove(dir / "meta.json");
    CHECK_THROWS_AS(load_model(dir), DataError);
    std::filesystem::remove_all(dir);
  }
}
