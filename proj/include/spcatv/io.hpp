#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace spcatv::io {

// Dense matrices as headerless CSV, one row per line. Values are written with
// 17 significant digits so that a write/read cycle is lossless.
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
std::string format_double(double x);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// "data/X.csv" -> "data/X.json"
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace spcatv::io
