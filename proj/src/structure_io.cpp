#include <fstream>
#include <sstream>
#include <string>

#include "spcatv/error.hpp"
#include "spcatv/io.hpp"
#include "spcatv/structure.hpp"

namespace spcatv {
namespace {

// Reads the next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

GridMask read_grid_mask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string tag;
  GridDims dims;
  if (!(in >> tag >> dims.ni >> dims.nj >> dims.nk) || tag != "GRID")
    throw DataError(path.string() + ": expected header 'GRID ni nj nk'");
  if (dims.ni < 1 || dims.nj < 1 || dims.nk < 1)
    throw DataError(path.string() + ": grid dimensions must be positive");
  std::vector<std::uint8_t> inside;
  inside.reserve(dims.cell_count());
  int value = 0;
  while (inside.size() < dims.cell_count() && (in >> value)) {
    if (value != 0 && value != 1) throw DataError(path.string() + ": mask values must be 0 or 1");
    inside.push_back(static_cast<std::uint8_t>(value));
  }
  if (inside.size() != dims.cell_count())
    throw DataError(path.string() + ": expected " + std::to_string(dims.cell_count()) +
                    " mask values, found " + std::to_string(inside.size()));
  return GridMask(dims, std::move(inside));
}

void write_grid_mask(const std::filesystem::path& path, const GridMask& mask) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const GridDims& d = mask.dims();
  out << "GRID " << d.ni << ' ' << d.nj << ' ' << d.nk << '\n';
  for (int k = 0; k < d.nk; ++k)
    for (int j = 0; j < d.nj; ++j) {
      for (int i = 0; i < d.ni; ++i) out << (i > 0 ? " " : "") << (mask.inside(i, j, k) ? 1 : 0);
      out << '\n';
    }
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!next_line(in, line)) throw DataError(path.string() + ": empty mesh file");
  if (line.rfind("OFF", 0) == 0) {
    std::string rest = line.substr(3);
    if (rest.find_first_not_of(" \t\r") == std::string::npos) {
      if (!next_line(in, line)) throw DataError(path.string() + ": missing counts");
    } else {
      line = rest;
    }
  }
  long long nv = -1;
  long long nt = -1;
  {
    std::istringstream counts(line);
    if (!(counts >> nv >> nt) || nv < 0 || nt < 0)
      throw DataError(path.string() + ": expected 'vertex_count triangle_count'");
  }
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<std::size_t>(nv));
  for (auto& v : mesh.vertices) {
    if (!next_line(in, line)) throw DataError(path.string() + ": truncated vertex list");
    std::istringstream ls(line);
    if (!(ls >> v[0] >> v[1] >> v[2])) throw DataError(path.string() + ": bad vertex line '" + line + "'");
  }
  mesh.triangles.resize(static_cast<std::size_t>(nt));
  for (auto& t : mesh.triangles) {
    if (!next_line(in, line)) throw DataError(path.string() + ": truncated triangle list");
    std::istringstream ls(line);
    std::vector<long long> ids;
    long long x = 0;
    while (ls >> x) ids.push_back(x);
    if (ids.size() == 4 && ids[0] == 3) ids.erase(ids.begin());
    if (ids.size() != 3) throw DataError(path.string() + ": bad triangle line '" + line + "'");
    t = {static_cast<Index>(ids[0]), static_cast<Index>(ids[1]), static_cast<Index>(ids[2])};
  }
  mesh.validate();
  return mesh;
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const auto& v : mesh.vertices)
    out << io::format_double(v[0]) << ' ' << io::format_double(v[1]) << ' '
        << io::format_double(v[2]) << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_operator_triplets(const std::filesystem::path& path, const GroupLinearOperator& op) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "row,col,value\n";
  for (const Triplet& t : op.triplets())
    out << t.row << ',' << t.col << ',' << io::format_double(t.value) << '\n';
}

}  // namespace spcatv
