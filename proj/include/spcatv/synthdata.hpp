#pragma once

// Synthetic benchmark: images X = U_true V_true^T + noise on a side x side
// pixel grid. V_true holds three dot patterns (two upper discs, two lower
// discs, one central disc), mixing coefficients are standard normal and the
// noise is Gaussian, rescaled so that ||signal||_F / ||noise||_F = snr.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

#include "spcatv/structure.hpp"

namespace spcatv {

struct SyntheticDataset {
  Eigen::MatrixXd X;       // n x p
  Eigen::MatrixXd U_true;  // n x 3
  Eigen::MatrixXd V_true;  // p x 3
  double snr = 0.0;
  std::uint64_t seed = 0;
  int side = 0;

  Index samples() const { return X.rows(); }
  Index features() const { return X.cols(); }
  GridMask grid() const { return GridMask::full(side, side); }
  // First n/2 rows train, the rest test.
  Index train_rows() const { return X.rows() / 2; }
  Eigen::MatrixXd train() const { return X.topRows(train_rows()); }
  Eigen::MatrixXd test() const { return X.bottomRows(X.rows() - train_rows()); }
};

// side^2 x 3 loadings with value 1 inside discs of radius side/10.
Eigen::MatrixXd make_loadings(int side);

// snr = +infinity produces a noiseless dataset.
SyntheticDataset generate_dataset(std::uint64_t seed, Index n, int side, double snr);

// Directory with X.csv, X.json (sidecar), U_true.csv, V_true.csv, meta.json.
void save_dataset(const std::filesystem::path& dir, const SyntheticDataset& data);
SyntheticDataset load_dataset(const std::filesystem::path& dir);

}  // namespace spcatv
