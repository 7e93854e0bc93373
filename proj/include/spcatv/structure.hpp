#pragma once

// Group-structured linear operators A = [A_1; ...; A_G] such that the total
// variation of a loading vector is TV(v) = sum_g ||A_g v||_2.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace spcatv {

using Index = Eigen::Index;

struct GridDims {
  int ni = 1;
  int nj = 1;
  int nk = 1;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(ni) * static_cast<std::size_t>(nj) *
           static_cast<std::size_t>(nk);
  }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

// In-mask cells of a 3D grid (2D images use nk = 1). Features are numbered in
// cell order with i varying fastest, then j, then k.
class GridMask {
 public:
  GridMask(GridDims dims, std::vector<std::uint8_t> inside);
  static GridMask full(int ni, int nj, int nk = 1);

  const GridDims& dims() const { return dims_; }
  Index feature_count() const { return static_cast<Index>(features_.size()); }
  bool inside(int i, int j, int k) const;
  // -1 for cells outside the mask or the grid.
  Index feature_index(int i, int j, int k) const;
  std::array<int, 3> cell_of(Index feature) const;

 private:
  std::size_t linear(int i, int j, int k) const;

  GridDims dims_;
  std::vector<Index> index_map_;   // per cell, -1 outside
  std::vector<std::size_t> features_;  // feature -> cell
};

struct TriangleMesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<Index, 3>> triangles;

  // Throws DataError on out-of-range or repeated indices.
  void validate() const;
  // Sorted neighbour lists derived from triangle edges.
  std::vector<std::vector<Index>> adjacency() const;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Immutable after construction. Copies share the cached spectral norm.
class GroupLinearOperator {
 public:
  struct GroupView {
    Index row_offset;
    Index rows;
    std::span<const Index> cols;
    // rows x cols.size(), row-major
    std::span<const double> values;
  };

  class Builder;

  // An operator with p columns and no groups.
  static GroupLinearOperator empty(Index p);

  Index cols() const { return p_; }
  Index rows() const { return total_rows_; }
  Index group_count() const { return static_cast<Index>(row_offset_.size()) - 1; }
  GroupView group(Index g) const;
  std::vector<Index> group_row_counts() const;
  // group_count() + 1 entries; group g owns rows [offsets[g], offsets[g + 1]).
  std::span<const Index> row_offsets() const { return row_offset_; }

  void apply(std::span<const double> v, std::span<double> out) const;
  void apply_adjoint(std::span<const double> y, std::span<double> out) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const;

  // ||A||_2 by power iteration on A^T A from a seeded random start; stops when
  // successive Rayleigh quotients differ by at most tol (relative), or after
  // max_iterations.
  double spectral_norm(double tol, int max_iterations = 10000) const;
  // spectral_norm(1e-10), computed once and cached.
  double norm() const;
  double norm_squared() const {
    const double n = norm();
    return n * n;
  }

  std::vector<Triplet> triplets() const;
  Eigen::SparseMatrix<double> to_sparse() const;
  Eigen::MatrixXd to_dense() const;

 private:
  GroupLinearOperator() = default;
  void check_feature_length(std::size_t n, const char* what) const;

  struct NormCache;

  Index p_ = 0;
  Index total_rows_ = 0;
  std::vector<Index> row_offset_{0};
  std::vector<std::size_t> col_offset_{0};
  std::vector<std::size_t> value_offset_{0};
  std::vector<Index> cols_;
  std::vector<double> values_;
  // Row-compressed copy without explicit zeros, used by apply/apply_adjoint.
  std::vector<std::size_t> row_start_{0};
  std::vector<Index> entry_col_;
  std::vector<double> entry_value_;
  std::shared_ptr<NormCache> norm_cache_;
};

class GroupLinearOperator::Builder {
 public:
  explicit Builder(Index p);
  // Appends a group; `block` is rows x cols.size() in row-major order. Column
  // indices must lie in [0, p).
  Builder& add_group(std::span<const Index> cols, Index rows, std::span<const double> block);
  GroupLinearOperator build() &&;

 private:
  GroupLinearOperator op_;
};

// One group per in-mask voxel holding forward differences (+1 at the
// neighbour, -1 at the voxel) along i, j and k; rows whose neighbour is
// outside the mask are dropped.
GroupLinearOperator build_grid_tv_operator(const GridMask& mask);

// One group per vertex: the least-squares linear gradient fitted over the
// edge vectors to adjacent vertices. Full-rank neighbourhoods give three rows
// in x, y, z; rank-deficient ones give one row per non-zero singular value, in
// the principal directions of the edge vectors. Isolated vertices get no rows.
GroupLinearOperator build_mesh_tv_operator(const TriangleMesh& mesh);

// ---- file formats ----------------------------------------------------------

// "GRID ni nj nk" followed by ni*nj*nk 0/1 values, i fastest.
GridMask read_grid_mask(const std::filesystem::path& path);
void write_grid_mask(const std::filesystem::path& path, const GridMask& mask);

// OFF-style text: optional "OFF" line, "nv nt [ne]", nv coordinate lines,
// nt lines of "[3] a b c" with zero-based indices.
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

// CSV "row,col,value" triplets with zero-based indices.
void write_operator_triplets(const std::filesystem::path& path, const GroupLinearOperator& op);

}  // namespace spcatv
