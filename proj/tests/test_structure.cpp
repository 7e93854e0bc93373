#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spcatv/error.hpp"
#include "spcatv/smoothing.hpp"
#include "spcatv/structure.hpp"

using namespace spcatv;

namespace {

TriangleMesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return m;
}

double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }

}  // namespace

TEST_SUITE("structure_ops") {
  TEST_CASE("grid mask numbering has i fastest") {
    const GridMask m = GridMask::full(3, 2, 2);
    CHECK(m.feature_count() == 12);
    CHECK(m.feature_index(0, 0, 0) == 0);
    CHECK(m.feature_index(1, 0, 0) == 1);
    CHECK(m.feature_index(0, 1, 0) == 3);
    CHECK(m.feature_index(0, 0, 1) == 6);
    CHECK(m.feature_index(3, 0, 0) == -1);
    const auto c = m.cell_of(7);
    CHECK(c == std::array<int, 3>{1, 0, 1});

    GridMask holes({2, 2, 1}, {1, 0, 1, 1});
    CHECK(holes.feature_count() == 3);
    CHECK(holes.feature_index(1, 0, 0) == -1);
    CHECK(holes.feature_index(0, 1, 0) == 1);
  }

  TEST_CASE("full 2x2 grid has rows [2,1,1,0]") {
    const auto op = build_grid_tv_operator(GridMask::full(2, 2));
    CHECK(op.group_row_counts() == std::vector<Index>{2, 1, 1, 0});
    CHECK(op.rows() == 4);
    CHECK(op.cols() == 4);
  }

  TEST_CASE("full WxH grid row count") {
    for (auto [w, h] : {std::pair{5, 7}, std::pair{1, 4}, std::pair{50, 50}}) {
      const auto op = build_grid_tv_operator(GridMask::full(w, h));
      CHECK(op.rows() == (w - 1) * h + w * (h - 1));
    }
    const auto op3 = build_grid_tv_operator(GridMask::full(3, 4, 5));
    CHECK(op3.rows() == 2 * 4 * 5 + 3 * 3 * 5 + 3 * 4 * 4);
  }

  TEST_CASE("2x2 hand case has TV 2") {
    const auto op = build_grid_tv_operator(GridMask::full(2, 2));
    // Image rows [0 1] and [0 1].
    const Eigen::VectorXd v = (Eigen::VectorXd(4) << 0, 1, 0, 1).finished();
    const Eigen::VectorXd av = op.apply(v);
    std::vector<double> norms;
    for (Index g = 0; g < op.group_count(); ++g) {
      const auto grp = op.group(g);
      norms.push_back(av.segment(grp.row_offset, grp.rows).norm());
    }
    CHECK(norms == std::vector<double>{1, 0, 1, 0});
    CHECK(tv_value(op, v) == 2.0);
  }

  TEST_CASE("single voxel and empty masks") {
    const auto op = build_grid_tv_operator(GridMask::full(1, 1));
    CHECK(op.group_count() == 1);
    CHECK(op.rows() == 0);
    CHECK(op.apply(Eigen::VectorXd::Ones(1)).size() == 0);
    CHECK(tv_value(op, Eigen::VectorXd::Ones(1)) == 0.0);
    CHECK(op.spectral_norm(1e-10) == 0.0);
    CHECK_THROWS_WITH_AS(build_grid_tv_operator(GridMask({2, 2, 1}, {0, 0, 0, 0})), "no features", DataError);
  }

  TEST_CASE("masked rows are dropped") {
    const auto full = build_grid_tv_operator(GridMask::full(4, 4));
    std::vector<std::uint8_t> inside(16, 1);
    inside[5] = 0;
    const auto holed = build_grid_tv_operator(GridMask({4, 4, 1}, inside));
    CHECK(holed.cols() == 15);
    CHECK(holed.rows() <= full.rows());
    CHECK(holed.rows() == full.rows() - 4);
  }

  TEST_CASE("constant images have zero gradient; TV is homogeneous and shift invariant") {
    const auto op = build_grid_tv_operator(GridMask::full(6, 5));
    CHECK(op.apply(Eigen::VectorXd::Constant(30, 3.5)).isZero(0.0));
    std::mt19937_64 rng(1);
    const Eigen::VectorXd v = oracle::normal_vector(rng, 30);
    CHECK(tv_value(op, -2.5 * v) == doctest::Approx(2.5 * tv_value(op, v)).epsilon(1e-14));
    CHECK(tv_value(op, v + Eigen::VectorXd::Constant(30, 7.0)) ==
          doctest::Approx(tv_value(op, v)).epsilon(1e-12));
  }

  TEST_CASE("adjoint identity on random inputs") {
    std::mt19937_64 rng(2);
    std::vector<GroupLinearOperator> ops{build_grid_tv_operator(GridMask::full(4, 4)),
                                         build_grid_tv_operator(GridMask::full(3, 4, 5)),
                                         build_mesh_tv_operator(icosahedron())};
    for (const auto& op : ops) {
      for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd v = oracle::normal_vector(rng, op.cols());
        const Eigen::VectorXd y = oracle::normal_vector(rng, op.rows());
        const double lhs = inner(op.apply(v), y);
        const double rhs = inner(v, op.apply_adjoint(y));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
      }
      CHECK(op.apply_adjoint(Eigen::VectorXd::Zero(op.rows())).isZero(0.0));
    }
  }

  TEST_CASE("one-hot adjoint scatters the row") {
    const auto op = build_grid_tv_operator(GridMask::full(3, 3));
    const auto dense = op.to_dense();
    for (Index r = 0; r < op.rows(); ++r) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(op.rows());
      y[r] = 1.0;
      CHECK(op.apply_adjoint(y) == dense.row(r).transpose());
    }
  }

  TEST_CASE("block application equals the flattened matrix") {
    const auto op = build_grid_tv_operator(GridMask({4, 3, 2}, {1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1,
                                                                0, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1, 1}));
    std::mt19937_64 rng(3);
    const Eigen::VectorXd v = oracle::normal_vector(rng, op.cols());
    CHECK((op.apply(v) - op.to_dense() * v).norm() <= 1e-14);
    CHECK((op.apply(v) - op.to_sparse() * v).norm() <= 1e-14);
    for (const auto& t : op.triplets()) {
      CHECK(t.col >= 0);
      CHECK(t.col < op.cols());
    }
  }

  TEST_CASE("length mismatches throw") {
    const auto op = build_grid_tv_operator(GridMask::full(3, 3));
    CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(8)), std::invalid_argument);
    CHECK_THROWS_AS(op.apply_adjoint(Eigen::VectorXd::Zero(op.rows() + 1)), std::invalid_argument);
  }

  TEST_CASE("spectral norm of a 4-point chain") {
    const auto op = build_grid_tv_operator(GridMask::full(4, 1));
    const double expected = 2.0 * std::sin(3.0 * std::numbers::pi / 8.0);
    CHECK(oracle::dense_spectral_norm(op) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(op.spectral_norm(1e-12) == doctest::Approx(expected).epsilon(1e-6));
  }

  TEST_CASE("spectral norm against dense SVD") {
    for (auto [w, h] : {std::pair{10, 10}, std::pair{7, 13}, std::pair{20, 10}}) {
      const auto op = build_grid_tv_operator(GridMask::full(w, h));
      const double ref = oracle::dense_spectral_norm(op);
      CHECK(std::abs(op.norm() - ref) <= 1e-6 * ref);
    }
    const auto mesh_op = build_mesh_tv_operator(icosahedron());
    CHECK(std::abs(mesh_op.norm() - oracle::dense_spectral_norm(mesh_op)) <=
          1e-6 * oracle::dense_spectral_norm(mesh_op));
  }

  TEST_CASE("mesh operator recovers linear fields") {
    const TriangleMesh mesh = icosahedron();
    const auto op = build_mesh_tv_operator(mesh);
    CHECK(op.group_count() == 12);
    const Eigen::Vector3d slope(0.3, -1.2, 2.0);
    Eigen::VectorXd v(12);
    for (Index i = 0; i < 12; ++i)
      v[i] = slope.dot(Eigen::Vector3d(mesh.vertices[static_cast<std::size_t>(i)].data())) + 4.0;
    const Eigen::VectorXd av = op.apply(v);
    for (Index g = 0; g < op.group_count(); ++g) {
      const auto grp = op.group(g);
      REQUIRE(grp.rows == 3);
      CHECK((av.segment(grp.row_offset, 3) - slope).norm() <= 1e-8);
      CHECK(grp.cols.size() == 6);  // vertex plus its 5 neighbours
    }
  }

  TEST_CASE("mesh edge cases") {
    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {5, 5, 5}};
    tri.triangles = {{0, 1, 2}};
    const auto op = build_mesh_tv_operator(tri);
    CHECK(op.group_row_counts() == std::vector<Index>{2, 2, 2, 0});
    CHECK(op.apply(Eigen::VectorXd::Constant(4, -1.5)).norm() <= 1e-12);
    // The isolated vertex never contributes.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
    v[3] = 10.0;
    CHECK(tv_value(op, v) == 0.0);

    TriangleMesh bad = tri;
    bad.triangles = {{0, 1, 4}};
    CHECK_THROWS_AS(bad.validate(), DataError);
    CHECK_THROWS_AS(build_mesh_tv_operator(bad), DataError);
    bad.triangles = {{0, 1, 1}};
    CHECK_THROWS_AS(bad.validate(), DataError);
  }

  TEST_CASE("mesh adjacency is symmetric") {
    const auto adj = icosahedron().adjacency();
    for (std::size_t a = 0; a < adj.size(); ++a) {
      CHECK(adj[a].size() == 5);
      for (Index b : adj[a]) {
        const auto& back = adj[static_cast<std::size_t>(b)];
        CHECK(std::find(back.begin(), back.end(), static_cast<Index>(a)) != back.end());
      }
    }
  }

  TEST_CASE("mask, mesh and triplet files") {
    const auto dir = std::filesystem::temp_directory_path() / "spcatv_structure_io";
    std::filesystem::create_directories(dir);
    GridMask mask({3, 2, 1}, {1, 0, 1, 1, 1, 0});
    write_grid_mask(dir / "m.grid", mask);
    const GridMask back = read_grid_mask(dir / "m.grid");
    CHECK(back.dims() == mask.dims());
    CHECK(back.feature_count() == 4);
    CHECK_FALSE(back.inside(1, 0, 0));

    write_mesh(dir / "ico.off", icosahedron());
    const TriangleMesh m = read_mesh(dir / "ico.off");
    CHECK(m.vertices.size() == 12);
    CHECK(m.triangles.size() == 20);
    CHECK(m.vertices[3] == icosahedron().vertices[3]);

    write_operator_triplets(dir / "op.csv", build_grid_tv_operator(GridMask::full(2, 2)));
    std::ifstream in(dir / "op.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "row,col,value");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 8);

    std::ofstream(dir / "bad.grid") << "GRID 2 2 1\n1 1 1\n";
    CHECK_THROWS_AS(read_grid_mask(dir / "bad.grid"), DataError);
    std::filesystem::remove_all(dir);
  }
}
