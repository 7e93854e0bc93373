#include "spcatv/synthdata.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "spcatv/error.hpp"
#include "spcatv/io.hpp"

namespace spcatv {
namespace {

struct Disc {
  double row_frac;
  double col_frac;
  int component;
};

// (vertical, horizontal) fractional centres
constexpr Disc kDiscs[] = {
    {0.25, 0.3, 0}, {0.25, 0.7, 0},  // upper pair
    {0.75, 0.3, 1}, {0.75, 0.7, 1},  // lower pair
    {0.5, 0.5, 2},                   // centre
};

}  // namespace

Eigen::MatrixXd make_loadings(int side) {
  if (side < 16)
    throw std::invalid_argument("side must be at least 16 pixels to separate the dots");
  const double radius = side / 10.0;
  const Index p = static_cast<Index>(side) * side;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p, 3);
  Eigen::VectorXi owner = Eigen::VectorXi::Constant(p, -1);
  for (const Disc& d : kDiscs) {
    // Centres snap to pixel corners so every disc has the same footprint.
    const double cy = std::round(d.row_frac * side);
    const double cx = std::round(d.col_frac * side);
    for (int j = 0; j < side; ++j) {
      for (int i = 0; i < side; ++i) {
        const double dy = j + 0.5 - cy;
        const double dx = i + 0.5 - cx;
        if (dx * dx + dy * dy > radius * radius) continue;
        const Index f = static_cast<Index>(i) + static_cast<Index>(j) * side;
        if (owner[f] >= 0 && owner[f] != d.component)
          throw std::invalid_argument("dots overlap at side " + std::to_string(side));
        owner[f] = d.component;
        V(f, d.component) = 1.0;
      }
    }
  }
  return V;
}

SyntheticDataset generate_dataset(std::uint64_t seed, Index n, int side, double snr) {
  if (n < 2) throw std::invalid_argument("need at least 2 samples");
  if (!(snr > 0.0)) throw std::invalid_argument("snr must be positive");
  SyntheticDataset data;
  data.seed = seed;
  data.snr = snr;
  data.side = side;
  data.V_true = make_loadings(side);
  const Index p = data.V_true.rows();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  data.U_true.resize(n, 3);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < 3; ++k) data.U_true(i, k) = normal(rng);
  const Eigen::MatrixXd signal = data.U_true * data.V_true.transpose();

  Eigen::MatrixXd noise(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) noise(i, j) = normal(rng);

  if (std::isinf(snr)) {
    data.X = signal;
  } else {
    noise *= signal.norm() / (snr * noise.norm());
    data.X = signal + noise;
  }
  return data;
}

void save_dataset(const std::filesystem::path& dir, const SyntheticDataset& data) {
  io::ensure_directory(dir);
  io::write_csv_matrix(dir / "X.csv", data.X);
  io::write_csv_matrix(dir / "U_true.csv", data.U_true);
  io::write_csv_matrix(dir / "V_true.csv", data.V_true);
  const std::string grid = std::to_string(data.side) + "x" + std::to_string(data.side);
  io::write_json(io::sidecar_path(dir / "X.csv"),
                 {{"n", data.samples()}, {"p", data.features()}, {"structure", "grid:" + grid}});
  nlohmann::json meta{{"n", data.samples()},
                      {"p", data.features()},
                      {"side", data.side},
                      {"seed", data.seed},
                      {"train_rows", data.train_rows()}};
  if (std::isinf(data.snr))
    meta["snr"] = "inf";
  else
    meta["snr"] = data.snr;
  io::write_json(dir / "meta.json", meta);
}

SyntheticDataset load_dataset(const std::filesystem::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "meta.json");
  SyntheticDataset data;
  try {
    data.side = meta.at("side").get<int>();
    data.seed = meta.at("seed").get<std::uint64_t>();
    data.snr = meta.at("snr").is_string() ? std::numeric_limits<double>::infinity()
                                          : meta.at("snr").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
  data.X = io::read_csv_matrix(dir / "X.csv");
  data.U_true = io::read_csv_matrix(dir / "U_true.csv");
  data.V_true = io::read_csv_matrix(dir / "V_true.csv");
  const Index p = static_cast<Index>(data.side) * data.side;
  if (data.X.cols() != p || data.V_true.rows() != p || data.U_true.rows() != data.X.rows())
    throw DataError(dir.string() + ": dataset matrices disagree with meta.json");
  return data;
}

}  // namespace spcatv
