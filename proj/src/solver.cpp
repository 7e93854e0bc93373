#include "spcatv/solver.hpp"

#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>

#include "spcatv/io.hpp"
#include "spcatv/kernels.hpp"
#include "spcatv/smoothing.hpp"

namespace spcatv {

// ---- PenaltyWeights --------------------------------------------------------

PenaltyWeights PenaltyWeights::from_ratios(double global_weight, double l1_ratio,
                                           double tv_ratio) {
  if (!(global_weight > 0.0)) throw std::invalid_argument("global weight must be positive");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0) || !(tv_ratio >= 0.0 && tv_ratio <= 1.0))
    throw std::invalid_argument("l1 and tv ratios must lie in [0, 1]");
  const double ridge_ratio = 1.0 - l1_ratio - tv_ratio;
  if (!(ridge_ratio > 0.0))
    throw std::invalid_argument("l1_ratio + tv_ratio must be below 1 so that lambda_2 > 0");
  return {global_weight * l1_ratio, global_weight * ridge_ratio, global_weight * tv_ratio};
}

PenaltyWeights::Ratios PenaltyWeights::to_ratios() const {
  const double total = l1 + l2 + tv;
  if (!(total > 0.0)) throw std::invalid_argument("penalty weights sum to zero");
  return {total, l1 / total, tv / total};
}

void PenaltyWeights::validate() const {
  if (!(l1 >= 0.0)) throw std::invalid_argument("lambda_1 must be non-negative");
  if (!(tv >= 0.0)) throw std::invalid_argument("lambda (tv) must be non-negative");
  if (!(l2 > 0.0))
    throw std::invalid_argument("lambda_2 must be positive (strong convexity is required)");
}

// ---- problem ---------------------------------------------------------------

namespace {

std::span<const double> cview(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> mview(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Scratch buffers shared by the gradient and gap evaluations.
struct Workspace {
  explicit Workspace(const RidgeSmoothedProblem& problem)
      : alpha(problem.op().rows()), adjoint(problem.size()), scratch(problem.size()) {}
  Eigen::VectorXd alpha;
  Eigen::VectorXd adjoint;
  Eigen::VectorXd scratch;
};

bool uses_smoothing(const RidgeSmoothedProblem& problem) {
  return problem.smoothing_weight() > 0.0 && problem.op().rows() > 0;
}

// Fills ws.adjoint with A^T alpha*(v) (zero without smoothing). `image`, when
// given, holds A v and spares the forward application.
SmoothedPenalty smoothed_part(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v,
                              double mu, Workspace& ws, const Eigen::VectorXd* image = nullptr) {
  if (!uses_smoothing(problem)) {
    ws.adjoint.setZero();
    return {};
  }
  SmoothedPenalty sp;
  if (image != nullptr) {
    ws.alpha = *image;
    sp = smooth_image(problem.op(), mu, mview(ws.alpha));
  } else {
    sp = evaluate_smoothed(problem.op(), cview(v), mu, mview(ws.alpha));
  }
  problem.op().apply_adjoint(cview(ws.alpha), mview(ws.adjoint));
  return sp;
}

double gap_impl(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v, double mu,
                Workspace& ws, const Eigen::VectorXd* image = nullptr) {
  const Eigen::VectorXd& b = problem.target();
  const double gamma = problem.smoothing_weight();
  const double kappa = problem.l1_weight();
  const SmoothedPenalty sp = smoothed_part(problem, v, mu, ws, image);

  // sigma = v - b
  ws.scratch = v - b;
  const double sigma_sq = simd::sum_squares(cview(ws.scratch));
  const double v_sq = simd::sum_squares(cview(v));
  const double f_mu =
      0.5 * sigma_sq + 0.5 * v_sq + gamma * sp.value + kappa * simd::abs_sum(cview(v));
  const double loss_conj = 0.5 * sigma_sq + simd::dot(cview(ws.scratch), cview(b));

  // -sigma - gamma A^T alpha
  ws.scratch = -ws.scratch - gamma * ws.adjoint;
  const double penalty_conj = 0.5 * simd::shrink_sum_squares(cview(ws.scratch), kappa) +
                              0.5 * gamma * mu * sp.alpha_norm_sq;
  return f_mu + loss_conj + penalty_conj;
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

RidgeSmoothedProblem::RidgeSmoothedProblem(Eigen::VectorXd target, PenaltyWeights weights,
                                           const GroupLinearOperator& op)
    : target_(std::move(target)), weights_(weights), op_(&op) {
  weights_.validate();
  if (op.cols() != target_.size())
    throw std::invalid_argument("operator has " + std::to_string(op.cols()) +
                                " columns but the target has " + std::to_string(target_.size()) +
                                " features");
}

RidgeSmoothedProblem RidgeSmoothedProblem::from_data(const Eigen::MatrixXd& X,
                                                     const Eigen::VectorXd& u,
                                                     const PenaltyWeights& weights,
                                                     const GroupLinearOperator& op) {
  if (u.size() != X.rows()) throw std::invalid_argument("component length does not match samples");
  weights.validate();
  const double scale = 1.0 / (static_cast<double>(X.rows()) * weights.l2);
  return RidgeSmoothedProblem((X.transpose() * u) * scale, weights, op);
}

double RidgeSmoothedProblem::lipschitz(double mu) const {
  return smooth_part_lipschitz(*op_, mu, weights_);
}

double RidgeSmoothedProblem::objective(const Eigen::VectorXd& v) const {
  const double s = uses_smoothing(*this) ? tv_value(*op_, v) : 0.0;
  return 0.5 * (v - target_).squaredNorm() + 0.5 * v.squaredNorm() + smoothing_weight() * s +
         l1_weight() * v.lpNorm<1>();
}

double RidgeSmoothedProblem::smoothed_objective(const Eigen::VectorXd& v, double mu) const {
  require_positive(mu, "smoothing parameter mu");
  const double s = uses_smoothing(*this) ? smoothed_value(*op_, v, mu) : 0.0;
  return 0.5 * (v - target_).squaredNorm() + 0.5 * v.squaredNorm() + smoothing_weight() * s +
         l1_weight() * v.lpNorm<1>();
}

// ---- operations ------------------------------------------------------------

Eigen::VectorXd prox_l1(const Eigen::VectorXd& v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("l1 prox threshold must be non-negative");
  Eigen::VectorXd out(v.size());
  simd::soft_threshold(cview(v), t, mview(out));
  return out;
}

double duality_gap(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v, double mu) {
  require_positive(mu, "smoothing parameter mu");
  if (v.size() != problem.size()) throw std::invalid_argument("iterate length mismatch");
  Workspace ws(problem);
  return gap_impl(problem, v, mu, ws);
}

FistaResult fista(const RidgeSmoothedProblem& problem, const Eigen::VectorXd& v0, double eps_mu,
                  double mu, const FistaOptions& options) {
  require_positive(eps_mu, "FISTA precision eps_mu");
  require_positive(mu, "smoothing parameter mu");
  if (v0.size() != problem.size()) throw std::invalid_argument("starting point length mismatch");

  Workspace ws(problem);
  const Eigen::VectorXd& b = problem.target();
  const double gamma = problem.smoothing_weight();
  const double step = 1.0 / problem.lipschitz(mu);
  const double threshold = step * problem.l1_weight();
  const int stride = problem.size() > options.dense_gap_limit ? options.gap_stride : 1;

  FistaResult result;
  result.v = v0;
  result.gap = gap_impl(problem, result.v, mu, ws);
  if (!std::isfinite(result.gap)) throw SolverDiverged("divergence: non-finite gap at start");
  if (result.gap <= eps_mu) {
    result.converged = true;
    return result;
  }

  // A v is linear, so the image of the extrapolated point is extrapolated
  // from the images of the last two iterates.
  const bool smooth = uses_smoothing(problem);
  const Index rows = smooth ? problem.op().rows() : 0;
  Eigen::VectorXd image(rows);
  if (smooth) problem.op().apply(cview(result.v), mview(image));
  Eigen::VectorXd previous_image = image;
  Eigen::VectorXd z_image(rows);

  Eigen::VectorXd previous = v0;
  Eigen::VectorXd z(problem.size());
  Eigen::VectorXd grad(problem.size());
  Eigen::VectorXd next(problem.size());
  for (int it = 1; it <= options.max_iterations; ++it) {
    const int k = it + 1;
    const double beta = static_cast<double>(k - 2) / static_cast<double>(k + 1);
    simd::extrapolate(cview(result.v), cview(previous), beta, mview(z));
    if (smooth) simd::extrapolate(cview(image), cview(previous_image), beta, mview(z_image));

    smoothed_part(problem, z, mu, ws, smooth ? &z_image : nullptr);
    grad = 2.0 * z - b + gamma * ws.adjoint;
    simd::prox_gradient_step(cview(z), cview(grad), step, threshold, mview(next));

    previous.swap(result.v);
    result.v.swap(next);
    result.iterations = it;
    if (smooth) {
      previous_image.swap(image);
      problem.op().apply(cview(result.v), mview(image));
    }

    if (it % stride == 0 || it == options.max_iterations) {
      result.gap = gap_impl(problem, result.v, mu, ws, smooth ? &image : nullptr);
      if (!std::isfinite(result.gap))
        throw SolverDiverged("divergence: non-finite objective after " + std::to_string(it) +
                             " FISTA iterations");
      if (result.gap <= eps_mu) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

double mu_opt(double eps, const RidgeSmoothedProblem& problem) {
  require_positive(eps, "precision eps");
  const double gamma = problem.smoothing_weight();
  if (!uses_smoothing(problem)) return kMinMu;
  const double a = problem.op().norm_squared();
  if (!(a > 0.0)) return kMinMu;
  const double M = problem.dual_ball_bound();
  const double lip_loss = 2.0;
  // (-g M a + sqrt((g M a)^2 + M L a eps)) / (M L), rationalised so that the
  // subtraction does not cancel for small eps.
  const double gma = gamma * M * a;
  return a * eps / (gma + std::sqrt(gma * gma + M * lip_loss * a * eps));
}

ConestaResult conesta(const RidgeSmoothedProblem& problem, double eps,
                      const ConestaOptions& options) {
  require_positive(eps, "precision eps");
  if (!(options.tau > 0.0 && options.tau < 1.0))
    throw std::invalid_argument("continuation factor tau must lie in (0, 1)");

  const double gamma_m = problem.smoothing_weight() * problem.dual_ball_bound();
  ConestaResult result;
  result.v = options.v0 ? *options.v0 : Eigen::VectorXd::Zero(problem.size());
  if (result.v.size() != problem.size()) throw std::invalid_argument("starting point length mismatch");

  const double initial_gap = duality_gap(problem, result.v, kMinMu);
  result.trace.initial_gap = initial_gap;
  if (!std::isfinite(initial_gap)) throw SolverDiverged("divergence: non-finite initial gap");
  result.certified_gap = initial_gap + kMinMu * gamma_m;
  if (!(initial_gap > 0.0)) return result;

  double eps_i = options.tau * initial_gap;
  double mu = mu_opt(eps_i, problem);
  for (int i = 0; i < options.max_continuations; ++i) {
    ContinuationRecord rec;
    rec.continuation = i;
    rec.mu = mu;
    rec.eps = eps_i;
    rec.eps_mu = eps_i - mu * gamma_m;
    if (!(rec.eps_mu > 0.0)) {
      rec.eps_mu = 0.5 * eps_i;
      rec.clamped = true;
    }

    FistaResult inner = fista(problem, result.v, rec.eps_mu, mu, options.fista);
    result.v = std::move(inner.v);
    rec.fista_iterations = inner.iterations;
    rec.gap = inner.gap;
    rec.objective = problem.objective(result.v);
    rec.eps_bound = inner.gap + mu * gamma_m;
    result.trace.records.push_back(rec);
    result.certified_gap = rec.eps_bound;

    if (rec.eps_bound <= eps) return result;
    eps_i = options.tau * rec.eps_bound;
    mu = mu_opt(eps_i, problem);
  }
  throw ContinuationLimitExceeded("CONESTA did not reach precision " + io::format_double(eps) +
                                      " within " + std::to_string(options.max_continuations) +
                                      " continuations",
                                  std::move(result.trace));
}

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "continuation,mu,eps,eps_mu,fista_iters,gap,objective\n";
  for (const ContinuationRecord& r : trace.records)
    out << r.continuation << ',' << io::format_double(r.mu) << ',' << io::format_double(r.eps)
        << ',' << io::format_double(r.eps_mu) << ',' << r.fista_iterations << ','
        << io::format_double(r.gap) << ',' << io::format_double(r.objective) << '\n';
}

}  // namespace spcatv
