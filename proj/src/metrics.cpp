#include "spcatv/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spcatv/error.hpp"

namespace spcatv {

double reconstruction_error(const Eigen::MatrixXd& X_test, const SpcaModel& model) {
  return (X_test - reconstruction_from(model, transform(model, X_test))).norm();
}

std::vector<Index> solve_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian method with row/column potentials, O(n^2 m).
  const Index n = cost.rows();
  const Index m = cost.cols();
  if (n > m) throw std::invalid_argument("assignment needs rows <= cols");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> row_pot(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> col_pot(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> col_row(static_cast<std::size_t>(m + 1), 0);  // 1-based row owning column
  std::vector<Index> way(static_cast<std::size_t>(m + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    col_row[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = col_row[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (used[ju]) continue;
        const double cur = cost(i0 - 1, j - 1) - row_pot[static_cast<std::size_t>(i0)] - col_pot[ju];
        if (cur < minv[ju]) {
          minv[ju] = cur;
          way[ju] = j0;
        }
        if (minv[ju] < delta) {
          delta = minv[ju];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (used[ju]) {
          row_pot[static_cast<std::size_t>(col_row[ju])] += delta;
          col_pot[ju] -= delta;
        } else {
          minv[ju] -= delta;
        }
      }
      j0 = j1;
    } while (col_row[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      col_row[static_cast<std::size_t>(j0)] = col_row[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= m; ++j) {
    const Index r = col_row[static_cast<std::size_t>(j)];
    if (r > 0) assignment[static_cast<std::size_t>(r - 1)] = j - 1;
  }
  return assignment;
}

namespace {

Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd c(A.cols(), B.cols());
  for (Index i = 0; i < A.cols(); ++i) {
    const double na = A.col(i).norm();
    for (Index j = 0; j < B.cols(); ++j) {
      const double nb = B.col(j).norm();
      c(i, j) = (na > 0.0 && nb > 0.0) ? A.col(i).dot(B.col(j)) / (na * nb) : 0.0;
    }
  }
  return c;
}

}  // namespace

MatchResult match_components(const Eigen::MatrixXd& V_est, const Eigen::MatrixXd& V_ref) {
  if (V_est.rows() != V_ref.rows())
    throw std::invalid_argument("loadings have " + std::to_string(V_est.rows()) + " and " +
                                std::to_string(V_ref.rows()) + " features");
  const Eigen::MatrixXd cos = cosine_matrix(V_est, V_ref);
  MatchResult out;
  out.size_mismatch = V_est.cols() != V_ref.cols();
  out.permutation.assign(static_cast<std::size_t>(V_est.cols()), -1);
  out.signs.assign(static_cast<std::size_t>(V_est.cols()), 1);
  if (V_est.cols() == 0 || V_ref.cols() == 0) return out;

  if (V_est.cols() <= V_ref.cols()) {
    const auto rows = solve_assignment(-cos.cwiseAbs());
    for (std::size_t i = 0; i < rows.size(); ++i) out.permutation[i] = rows[i];
  } else {
    const Eigen::MatrixXd cost = -cos.cwiseAbs().transpose();
    const auto cols = solve_assignment(cost);
    for (std::size_t j = 0; j < cols.size(); ++j)
      out.permutation[static_cast<std::size_t>(cols[j])] = static_cast<Index>(j);
  }
  for (std::size_t i = 0; i < out.permutation.size(); ++i) {
    const Index j = out.permutation[i];
    if (j < 0) continue;
    const double c = cos(static_cast<Index>(i), j);
    out.signs[i] = c < 0.0 ? -1 : 1;
    out.score += std::abs(c);
  }
  return out;
}

double loading_mse(const Eigen::MatrixXd& V_est, const Eigen::MatrixXd& V_true) {
  const MatchResult match = match_components(V_est, V_true);
  const Index p = V_true.rows();
  const Index K = V_true.cols();
  if (K == 0 || p == 0) return 0.0;
  std::vector<Index> est_for_ref(static_cast<std::size_t>(K), -1);
  for (std::size_t i = 0; i < match.permutation.size(); ++i)
    if (match.permutation[i] >= 0) est_for_ref[static_cast<std::size_t>(match.permutation[i])] = static_cast<Index>(i);

  double total = 0.0;
  for (Index j = 0; j < K; ++j) {
    Eigen::VectorXd ref = V_true.col(j);
    if (ref.norm() > 0.0) ref.normalize();
    Eigen::VectorXd est = Eigen::VectorXd::Zero(p);
    const Index i = est_for_ref[static_cast<std::size_t>(j)];
    if (i >= 0 && V_est.col(i).norm() > 0.0)
      est = V_est.col(i).normalized() * static_cast<double>(match.signs[static_cast<std::size_t>(i)]);
    total += (est - ref).squaredNorm();
  }
  return total / static_cast<double>(K * p);
}

double dice_index(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dice_index needs equal lengths");
  Index na = 0;
  Index nb = 0;
  Index both = 0;
  for (Index j = 0; j < a.size(); ++j) {
    const bool in_a = a[j] != 0.0;
    const bool in_b = b[j] != 0.0;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

StabilityDice stability_dice(const std::vector<Eigen::MatrixXd>& loadings) {
  if (loadings.size() < 2) throw std::invalid_argument("stability needs at least 2 folds");
  Index K = loadings.front().cols();
  for (const auto& V : loadings) K = std::max(K, V.cols());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  double total = 0.0;
  double total_count = 0.0;
  for (std::size_t a = 0; a < loadings.size(); ++a) {
    for (std::size_t b = a + 1; b < loadings.size(); ++b) {
      const MatchResult m = match_components(loadings[a], loadings[b]);
      for (std::size_t k = 0; k < m.permutation.size(); ++k) {
        const Index j = m.permutation[k];
        if (j < 0) continue;
        const double d = dice_index(loadings[a].col(static_cast<Index>(k)), loadings[b].col(j));
        sums[static_cast<Index>(k)] += d;
        counts[static_cast<Index>(k)] += 1.0;
        total += d;
        total_count += 1.0;
      }
    }
  }
  StabilityDice out;
  out.per_component = Eigen::VectorXd::Zero(K);
  for (Index k = 0; k < K; ++k)
    if (counts[k] > 0.0) out.per_component[k] = sums[k] / counts[k];
  out.overall = total_count > 0.0 ? total / total_count : 0.0;
  return out;
}

}  // namespace spcatv
