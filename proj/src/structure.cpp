#include "spcatv/structure.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>

#include "spcatv/error.hpp"

namespace spcatv {

// ---- GridMask --------------------------------------------------------------

GridMask::GridMask(GridDims dims, std::vector<std::uint8_t> inside) : dims_(dims) {
  if (dims.ni < 1 || dims.nj < 1 || dims.nk < 1)
    throw std::invalid_argument("grid dimensions must be positive");
  if (inside.size() != dims.cell_count())
    throw DataError("mask has " + std::to_string(inside.size()) + " cells, grid needs " +
                    std::to_string(dims.cell_count()));
  index_map_.assign(inside.size(), -1);
  for (std::size_t c = 0; c < inside.size(); ++c) {
    if (inside[c] != 0) {
      index_map_[c] = static_cast<Index>(features_.size());
      features_.push_back(c);
    }
  }
}

GridMask GridMask::full(int ni, int nj, int nk) {
  GridDims dims{ni, nj, nk};
  if (ni < 1 || nj < 1 || nk < 1) throw std::invalid_argument("grid dimensions must be positive");
  return GridMask(dims, std::vector<std::uint8_t>(dims.cell_count(), 1));
}

std::size_t GridMask::linear(int i, int j, int k) const {
  return static_cast<std::size_t>(i) +
         static_cast<std::size_t>(dims_.ni) *
             (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.nj) * k);
}

bool GridMask::inside(int i, int j, int k) const { return feature_index(i, j, k) >= 0; }

Index GridMask::feature_index(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i >= dims_.ni || j >= dims_.nj || k >= dims_.nk) return -1;
  return index_map_[linear(i, j, k)];
}

std::array<int, 3> GridMask::cell_of(Index feature) const {
  const std::size_t c = features_.at(static_cast<std::size_t>(feature));
  const auto ni = static_cast<std::size_t>(dims_.ni);
  const auto nj = static_cast<std::size_t>(dims_.nj);
  return {static_cast<int>(c % ni), static_cast<int>((c / ni) % nj),
          static_cast<int>(c / (ni * nj))};
}

// ---- TriangleMesh ----------------------------------------------------------

void TriangleMesh::validate() const {
  const auto nv = static_cast<Index>(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (Index idx : tri)
      if (idx < 0 || idx >= nv)
        throw DataError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(idx) + " outside [0, " + std::to_string(nv) + ")");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw DataError("triangle " + std::to_string(t) + " is degenerate (repeated vertex)");
  }
}

std::vector<std::vector<Index>> TriangleMesh::adjacency() const {
  validate();
  std::vector<std::vector<Index>> adj(vertices.size());
  for (const auto& tri : triangles) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (a != b) adj[static_cast<std::size_t>(tri[a])].push_back(tri[b]);
      }
    }
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

// ---- GroupLinearOperator ---------------------------------------------------

struct GroupLinearOperator::NormCache {
  std::once_flag once;
  double value = 0.0;
};

GroupLinearOperator::Builder::Builder(Index p) {
  if (p < 1) throw std::invalid_argument("no features");
  op_.p_ = p;
}

GroupLinearOperator::Builder& GroupLinearOperator::Builder::add_group(
    std::span<const Index> cols, Index rows, std::span<const double> block) {
  if (rows < 0) throw std::invalid_argument("negative group row count");
  if (block.size() != static_cast<std::size_t>(rows) * cols.size())
    throw std::invalid_argument("group block size does not match rows x cols");
  for (Index c : cols)
    if (c < 0 || c >= op_.p_)
      throw std::invalid_argument("group column " + std::to_string(c) + " outside [0, " +
                                  std::to_string(op_.p_) + ")");
  op_.cols_.insert(op_.cols_.end(), cols.begin(), cols.end());
  op_.values_.insert(op_.values_.end(), block.begin(), block.end());
  op_.total_rows_ += rows;
  op_.row_offset_.push_back(op_.total_rows_);
  op_.col_offset_.push_back(op_.cols_.size());
  op_.value_offset_.push_back(op_.values_.size());
  return *this;
}

GroupLinearOperator GroupLinearOperator::Builder::build() && {
  op_.row_start_.assign(1, 0);
  op_.row_start_.reserve(static_cast<std::size_t>(op_.total_rows_) + 1);
  for (std::size_t g = 0; g + 1 < op_.row_offset_.size(); ++g) {
    const std::size_t ncols = op_.col_offset_[g + 1] - op_.col_offset_[g];
    const double* a = op_.values_.data() + op_.value_offset_[g];
    for (Index r = op_.row_offset_[g]; r < op_.row_offset_[g + 1]; ++r, a += ncols) {
      for (std::size_t c = 0; c < ncols; ++c) {
        if (a[c] == 0.0) continue;
        op_.entry_col_.push_back(op_.cols_[op_.col_offset_[g] + c]);
        op_.entry_value_.push_back(a[c]);
      }
      op_.row_start_.push_back(op_.entry_col_.size());
    }
  }
  op_.norm_cache_ = std::make_shared<NormCache>();
  return std::move(op_);
}

GroupLinearOperator GroupLinearOperator::empty(Index p) { return Builder(p).build(); }

GroupLinearOperator::GroupView GroupLinearOperator::group(Index g) const {
  const auto gi = static_cast<std::size_t>(g);
  const Index rows = row_offset_[gi + 1] - row_offset_[gi];
  std::span<const Index> cols(cols_.data() + col_offset_[gi], col_offset_[gi + 1] - col_offset_[gi]);
  std::span<const double> values(values_.data() + value_offset_[gi],
                                 value_offset_[gi + 1] - value_offset_[gi]);
  return {row_offset_[gi], rows, cols, values};
}

std::vector<Index> GroupLinearOperator::group_row_counts() const {
  std::vector<Index> counts;
  counts.reserve(static_cast<std::size_t>(group_count()));
  for (std::size_t g = 0; g + 1 < row_offset_.size(); ++g)
    counts.push_back(row_offset_[g + 1] - row_offset_[g]);
  return counts;
}

void GroupLinearOperator::check_feature_length(std::size_t n, const char* what) const {
  if (n != static_cast<std::size_t>(p_))
    throw std::invalid_argument(std::string(what) + " has length " + std::to_string(n) +
                                ", operator expects " + std::to_string(p_));
}

void GroupLinearOperator::apply(std::span<const double> v, std::span<double> out) const {
  check_feature_length(v.size(), "feature vector");
  if (out.size() != static_cast<std::size_t>(total_rows_))
    throw std::invalid_argument("output length does not match operator rows");
  const Index* col = entry_col_.data();
  const double* val = entry_value_.data();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = 0.0;
    for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e)
      s += val[e] * v[static_cast<std::size_t>(col[e])];
    out[r] = s;
  }
}

void GroupLinearOperator::apply_adjoint(std::span<const double> y, std::span<double> out) const {
  if (y.size() != static_cast<std::size_t>(total_rows_))
    throw std::invalid_argument("stacked vector has length " + std::to_string(y.size()) +
                                ", operator has " + std::to_string(total_rows_) + " rows");
  check_feature_length(out.size(), "output");
  std::fill(out.begin(), out.end(), 0.0);
  const Index* col = entry_col_.data();
  const double* val = entry_value_.data();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e)
      out[static_cast<std::size_t>(col[e])] += val[e] * yr;
  }
}

Eigen::VectorXd GroupLinearOperator::apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(total_rows_);
  apply(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
        std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::VectorXd GroupLinearOperator::apply_adjoint(const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(p_);
  apply_adjoint(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

double GroupLinearOperator::spectral_norm(double tol, int max_iterations) const {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm tolerance must be positive");
  if (total_rows_ == 0) return 0.0;

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(p_);
  for (Index i = 0; i < p_; ++i) x[i] = normal(rng);
  x.normalize();

  Eigen::VectorXd ax(total_rows_);
  Eigen::VectorXd y(p_);
  double rayleigh = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    apply(std::span<const double>(x.data(), static_cast<std::size_t>(p_)),
          std::span<double>(ax.data(), static_cast<std::size_t>(total_rows_)));
    apply_adjoint(std::span<const double>(ax.data(), static_cast<std::size_t>(total_rows_)),
                  std::span<double>(y.data(), static_cast<std::size_t>(p_)));
    const double next = x.dot(y);
    const double ynorm = y.norm();
    if (ynorm == 0.0) return 0.0;
    const bool done = it > 0 && std::abs(next - rayleigh) <= tol * next;
    rayleigh = next;
    if (done) break;
    x = y / ynorm;
  }
  return std::sqrt(std::max(rayleigh, 0.0));
}

double GroupLinearOperator::norm() const {
  std::call_once(norm_cache_->once, [this] { norm_cache_->value = spectral_norm(1e-10); });
  return norm_cache_->value;
}

std::vector<Triplet> GroupLinearOperator::triplets() const {
  std::vector<Triplet> out;
  const std::size_t groups = row_offset_.size() - 1;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t ncols = col_offset_[g + 1] - col_offset_[g];
    const double* a = values_.data() + value_offset_[g];
    for (Index r = row_offset_[g]; r < row_offset_[g + 1]; ++r, a += ncols)
      for (std::size_t c = 0; c < ncols; ++c)
        if (a[c] != 0.0) out.push_back({r, cols_[col_offset_[g] + c], a[c]});
  }
  return out;
}

Eigen::SparseMatrix<double> GroupLinearOperator::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (const Triplet& t : triplets()) trips.emplace_back(t.row, t.col, t.value);
  Eigen::SparseMatrix<double> m(total_rows_, p_);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::MatrixXd GroupLinearOperator::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(total_rows_, p_);
  for (const Triplet& t : triplets()) m(t.row, t.col) += t.value;
  return m;
}

// ---- builders --------------------------------------------------------------

GroupLinearOperator build_grid_tv_operator(const GridMask& mask) {
  const Index p = mask.feature_count();
  if (p < 1) throw DataError("no features");
  GroupLinearOperator::Builder builder(p);
  std::vector<Index> cols;
  std::vector<double> block;
  for (Index g = 0; g < p; ++g) {
    const auto [i, j, k] = mask.cell_of(g);
    cols.assign(1, g);
    const Index neighbours[3] = {mask.feature_index(i + 1, j, k), mask.feature_index(i, j + 1, k),
                                 mask.feature_index(i, j, k + 1)};
    for (Index nb : neighbours)
      if (nb >= 0) cols.push_back(nb);
    const auto rows = static_cast<Index>(cols.size()) - 1;
    block.assign(static_cast<std::size_t>(rows) * cols.size(), 0.0);
    for (Index r = 0; r < rows; ++r) {
      block[static_cast<std::size_t>(r) * cols.size()] = -1.0;
      block[static_cast<std::size_t>(r) * cols.size() + static_cast<std::size_t>(r) + 1] = 1.0;
    }
    builder.add_group(cols, rows, block);
  }
  return std::move(builder).build();
}

GroupLinearOperator build_mesh_tv_operator(const TriangleMesh& mesh) {
  const auto p = static_cast<Index>(mesh.vertices.size());
  if (p < 1) throw DataError("no features");
  const auto adj = mesh.adjacency();
  GroupLinearOperator::Builder builder(p);
  std::vector<Index> cols;
  std::vector<double> block;
  for (Index g = 0; g < p; ++g) {
    const auto& nbrs = adj[static_cast<std::size_t>(g)];
    const auto m = static_cast<Index>(nbrs.size());
    if (m == 0) {
      builder.add_group(std::span<const Index>(&g, 1), 0, {});
      continue;
    }
    const auto& origin = mesh.vertices[static_cast<std::size_t>(g)];
    Eigen::MatrixXd edges(m, 3);
    for (Index e = 0; e < m; ++e) {
      const auto& q = mesh.vertices[static_cast<std::size_t>(nbrs[static_cast<std::size_t>(e)])];
      for (int d = 0; d < 3; ++d) edges(e, d) = q[static_cast<std::size_t>(d)] - origin[static_cast<std::size_t>(d)];
    }
    // gradient = V S^+ U^T (values at neighbours - value at g)
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = 1e-10 * (s.size() > 0 ? s[0] : 0.0);
    Index rank = 0;
    while (rank < s.size() && s[rank] > cutoff) ++rank;
    if (rank == 0) {
      builder.add_group(std::span<const Index>(&g, 1), 0, {});
      continue;
    }
    Eigen::MatrixXd weights;  // rows x m, acting on neighbour differences
    const Eigen::MatrixXd scaled_ut =
        s.head(rank).cwiseInverse().asDiagonal() * svd.matrixU().leftCols(rank).transpose();
    if (rank == 3)
      weights = svd.matrixV() * scaled_ut;
    else
      weights = scaled_ut;

    const Index rows = weights.rows();
    cols.assign(1, g);
    cols.insert(cols.end(), nbrs.begin(), nbrs.end());
    block.assign(static_cast<std::size_t>(rows * (m + 1)), 0.0);
    for (Index r = 0; r < rows; ++r) {
      double centre = 0.0;
      for (Index e = 0; e < m; ++e) {
        block[static_cast<std::size_t>(r * (m + 1) + e + 1)] = weights(r, e);
        centre -= weights(r, e);
      }
      block[static_cast<std::size_t>(r * (m + 1))] = centre;
    }
    builder.add_group(cols, rows, block);
  }
  return std::move(builder).build();
}

}  // namespace spcatv
