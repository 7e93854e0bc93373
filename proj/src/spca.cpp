#include "spcatv/spca.hpp"

#include <cmath>
#include <random>
#include <string>

#include "spcatv/error.hpp"
#include "spcatv/io.hpp"

namespace spcatv {

SpcaModel SpcaModel::empty(Index features) {
  SpcaModel m;
  m.U = Eigen::MatrixXd(0, 0);
  m.V = Eigen::MatrixXd(features, 0);
  m.means = Eigen::VectorXd::Zero(features);
  m.explained_variance = Eigen::VectorXd(0);
  m.residual_energy = Eigen::VectorXd(0);
  return m;
}

Eigen::VectorXd update_u(const Eigen::MatrixXd& X, const Eigen::VectorXd& v) {
  if (v.size() != X.cols()) throw std::invalid_argument("loading length does not match features");
  Eigen::VectorXd xv = X * v;
  const double norm = xv.norm();
  if (!(norm > 0.0)) throw DegenerateLoading("degenerate loading: X v = 0");
  return xv / norm;
}

Eigen::MatrixXd deflate(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& v) {
  if (u.size() != X.rows() || v.size() != X.cols())
    throw std::invalid_argument("deflation shapes do not conform");
  return X - u * v.transpose();
}

ComponentFit fit_component(const Eigen::MatrixXd& X, const GroupLinearOperator& op,
                           const PenaltyWeights& weights, double eps, std::uint64_t seed,
                           const SpcaOptions& options) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("empty data matrix");
  if (op.cols() != X.cols())
    throw DataError("structure has " + std::to_string(op.cols()) + " features, data has " +
                    std::to_string(X.cols()));
  weights.validate();

  ComponentFit out;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  out.u.resize(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out.u[i] = normal(rng);
  out.u.normalize();
  out.v = Eigen::VectorXd::Zero(X.cols());

  ConestaOptions conesta_options;
  conesta_options.fista = options.fista;
  conesta_options.max_continuations = options.max_continuations;

  double previous_error = 0.0;
  for (int i = 0; i < options.max_alternations; ++i) {
    const RidgeSmoothedProblem problem = RidgeSmoothedProblem::from_data(X, out.u, weights, op);
    ConestaResult solved = conesta(problem, eps, conesta_options);
    out.traces.push_back(std::move(solved.trace));
    out.alternations = i + 1;
    if (solved.v.isZero(0.0)) {
      out.exhausted = true;
      return out;
    }
    try {
      out.u = update_u(X, solved.v);
    } catch (const DegenerateLoading&) {
      out.exhausted = true;
      return out;
    }
    out.v = std::move(solved.v);

    const double error = (X - out.u * out.v.transpose()).norm();
    // The criterion compares two consecutive fitted pairs.
    if (error == 0.0 || (i > 0 && std::abs(error - previous_error) / error <= eps)) {
      out.converged = true;
      break;
    }
    previous_error = error;
  }
  return out;
}

SpcaModel fit(const Eigen::MatrixXd& X, const GroupLinearOperator& op, const SpcaOptions& options) {
  if (options.components < 1) throw std::invalid_argument("number of components must be >= 1");
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("empty data matrix");

  SpcaModel model = SpcaModel::empty(X.cols());
  model.weights = options.weights;
  model.eps = options.eps;
  model.seed = options.seed;
  model.requested_components = options.components;

  Eigen::MatrixXd residual = X;
  if (options.center) {
    model.means = X.colwise().mean().transpose();
    residual.rowwise() -= model.means.transpose();
  }

  const double total_energy = residual.squaredNorm();
  std::vector<Eigen::VectorXd> us;
  std::vector<Eigen::VectorXd> vs;
  std::vector<double> energy{total_energy};
  for (int k = 0; k < options.components; ++k) {
    const std::uint64_t component_seed = options.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k);
    ComponentFit c = fit_component(residual, op, options.weights, options.eps, component_seed, options);
    if (c.exhausted) {
      model.truncated = true;
      break;
    }
    residual = deflate(residual, c.u, c.v);
    energy.push_back(residual.squaredNorm());
    us.push_back(std::move(c.u));
    vs.push_back(std::move(c.v));
    model.traces.push_back(std::move(c.traces));
    if (options.accept_component && !options.accept_component(k, vs.back())) {
      model.aborted = true;
      break;
    }
  }

  const auto K = static_cast<Index>(vs.size());
  model.U.resize(X.rows(), K);
  model.V.resize(X.cols(), K);
  model.explained_variance.resize(K);
  model.residual_energy.resize(K + 1);
  model.residual_energy[0] = energy[0];
  for (Index k = 0; k < K; ++k) {
    model.U.col(k) = us[static_cast<std::size_t>(k)];
    model.V.col(k) = vs[static_cast<std::size_t>(k)];
    model.residual_energy[k + 1] = energy[static_cast<std::size_t>(k + 1)];
    model.explained_variance[k] =
        total_energy > 0.0 ? (energy[static_cast<std::size_t>(k)] - energy[static_cast<std::size_t>(k + 1)]) / total_energy
                           : 0.0;
  }
  return model;
}

Eigen::MatrixXd transform(const SpcaModel& model, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != model.features())
    throw DataError("data has " + std::to_string(X_new.cols()) + " features, model has " +
                    std::to_string(model.features()));
  Eigen::MatrixXd residual = X_new;
  residual.rowwise() -= model.means.transpose();
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(X_new.rows(), model.components());
  for (Index k = 0; k < model.components(); ++k) {
    const auto v = model.V.col(k);
    const double vv = v.squaredNorm();
    if (!(vv > 0.0)) continue;
    scores.col(k) = residual * v / vv;
    residual -= scores.col(k) * v.transpose();
  }
  return scores;
}

Eigen::MatrixXd reconstruction_from(const SpcaModel& model, const Eigen::MatrixXd& scores) {
  if (scores.cols() != model.components())
    throw std::invalid_argument("score matrix has " + std::to_string(scores.cols()) +
                                " columns, model has " + std::to_string(model.components()) +
                                " components");
  Eigen::MatrixXd out = scores * model.V.transpose();
  out.rowwise() += model.means.transpose();
  return out;
}

// ---- persistence -----------------------------------------------------------

void save_model(const std::filesystem::path& dir, const SpcaModel& model) {
  io::ensure_directory(dir);
  io::write_csv_matrix(dir / "U.csv", model.U);
  io::write_csv_matrix(dir / "V.csv", model.V);
  io::write_csv_matrix(dir / "means.csv", model.means.transpose());

  nlohmann::json meta;
  meta["components"] = model.components();
  meta["requested_components"] = model.requested_components;
  meta["truncated"] = model.truncated;
  meta["samples"] = model.U.rows();
  meta["features"] = model.features();
  meta["weights"] = {{"l1", model.weights.l1}, {"l2", model.weights.l2}, {"tv", model.weights.tv}};
  meta["eps"] = model.eps;
  meta["seed"] = model.seed;
  meta["explained_variance"] =
      std::vector<double>(model.explained_variance.data(),
                          model.explained_variance.data() + model.explained_variance.size());
  meta["residual_energy"] = std::vector<double>(
      model.residual_energy.data(), model.residual_energy.data() + model.residual_energy.size());
  io::write_json(dir / "meta.json", meta);

  const auto trace_dir = dir / "traces";
  io::ensure_directory(trace_dir);
  for (std::size_t k = 0; k < model.traces.size(); ++k)
    for (std::size_t i = 0; i < model.traces[k].size(); ++i)
      write_trace_csv(trace_dir / ("component_" + std::to_string(k + 1) + "_alternation_" +
                                   std::to_string(i + 1) + ".csv"),
                      model.traces[k][i]);
}

SpcaModel load_model(const std::filesystem::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "meta.json");
  try {
    const Index K = meta.at("components").get<Index>();
    const Index p = meta.at("features").get<Index>();
    const Index n = meta.at("samples").get<Index>();
    SpcaModel model = SpcaModel::empty(p);
    if (K > 0) {
      model.U = io::read_csv_matrix(dir / "U.csv");
      model.V = io::read_csv_matrix(dir / "V.csv");
    } else {
      model.U = Eigen::MatrixXd(n, 0);
    }
    const Eigen::MatrixXd means = io::read_csv_matrix(dir / "means.csv");
    if (model.V.rows() != p || model.V.cols() != K || model.U.cols() != K || means.rows() != 1 ||
        means.cols() != p)
      throw DataError(dir.string() + ": model matrices disagree with meta.json");
    model.means = means.row(0).transpose();
    model.weights = {meta.at("weights").at("l1").get<double>(),
                     meta.at("weights").at("l2").get<double>(),
                     meta.at("weights").at("tv").get<double>()};
    model.eps = meta.at("eps").get<double>();
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.requested_components = meta.at("requested_components").get<int>();
    model.truncated = meta.at("truncated").get<bool>();
    const auto ev = meta.at("explained_variance").get<std::vector<double>>();
    model.explained_variance = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Index>(ev.size()));
    const auto re = meta.at("residual_energy").get<std::vector<double>>();
    model.residual_energy = Eigen::Map<const Eigen::VectorXd>(re.data(), static_cast<Index>(re.size()));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  }
}

}  // namespace spcatv
