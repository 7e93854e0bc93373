#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spcatv/error.hpp"
#include "spcatv/experiment.hpp"
#include "spcatv/io.hpp"
#include "spcatv/spca.hpp"
#include "spcatv/structure.hpp"
#include "spcatv/synthdata.hpp"

namespace fs = std::filesystem;
using namespace spcatv;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

struct StructureFlags {
  std::string mask;
  std::string mesh;
  std::string grid;
};

struct PenaltyFlags {
  double global_weight = 1.0;
  double l1_ratio = 0.0;
  double tv_ratio = 0.0;

  PenaltyWeights weights() const { return PenaltyWeights::from_ratios(global_weight, l1_ratio, tv_ratio); }
};

void add_structure_flags(CLI::App* app, StructureFlags& s) {
  auto* mask = app->add_option("--mask", s.mask, "Grid mask file ('GRID ni nj nk' + 0/1 values)");
  auto* mesh = app->add_option("--mesh", s.mesh, "Triangle mesh file (OFF)");
  auto* grid = app->add_option("--grid", s.grid, "Full grid dimensions WxH or WxHxD");
  mask->excludes(mesh)->excludes(grid);
  mesh->excludes(grid);
}

void add_penalty_flags(CLI::App* app, PenaltyFlags& p) {
  app->add_option("--global-weight", p.global_weight, "Total penalty weight")->capture_default_str();
  app->add_option("--l1-ratio", p.l1_ratio, "lambda_1 share of the global weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--tv-ratio", p.tv_ratio, "TV share of the global weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

GridDims parse_grid(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || value < 1) throw std::invalid_argument("bad grid '" + text + "', expected WxH or WxHxD");
    dims.push_back(value);
  }
  if (dims.size() < 2 || dims.size() > 3) throw std::invalid_argument("bad grid '" + text + "', expected WxH or WxHxD");
  return {dims[0], dims[1], dims.size() == 3 ? dims[2] : 1};
}

// "grid:WxH", "mask:path" or "mesh:path"; relative paths resolve against base.
std::string structure_spec(const StructureFlags& s) {
  if (!s.mask.empty()) return "mask:" + fs::absolute(s.mask).string();
  if (!s.mesh.empty()) return "mesh:" + fs::absolute(s.mesh).string();
  if (!s.grid.empty()) return "grid:" + s.grid;
  return "";
}

std::string sidecar_structure(const fs::path& data) {
  const fs::path sidecar = io::sidecar_path(data);
  if (!fs::exists(sidecar)) return "";
  const auto meta = io::read_json(sidecar);
  if (!meta.contains("structure")) return "";
  std::string spec = meta.at("structure").get<std::string>();
  const auto colon = spec.find(':');
  if (colon != std::string::npos && spec.substr(0, colon) != "grid") {
    const fs::path p = spec.substr(colon + 1);
    if (p.is_relative()) spec = spec.substr(0, colon + 1) + (sidecar.parent_path() / p).string();
  }
  return spec;
}

struct Structure {
  std::string spec;
  std::optional<GridMask> mask;
  std::optional<TriangleMesh> mesh;
  GroupLinearOperator op = GroupLinearOperator::empty(1);
};

Structure load_structure(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw DataError("bad structure reference '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  Structure s;
  s.spec = spec;
  if (kind == "grid") {
    const GridDims d = parse_grid(arg);
    s.mask = GridMask::full(d.ni, d.nj, d.nk);
    s.op = build_grid_tv_operator(*s.mask);
  } else if (kind == "mask") {
    s.mask = read_grid_mask(arg);
    s.op = build_grid_tv_operator(*s.mask);
  } else if (kind == "mesh") {
    s.mesh = read_mesh(arg);
    s.op = build_mesh_tv_operator(*s.mesh);
  } else {
    throw DataError("unknown structure kind '" + kind + "'");
  }
  return s;
}

Structure resolve_structure(const StructureFlags& flags, const fs::path& data) {
  std::string spec = structure_spec(flags);
  if (spec.empty()) spec = sidecar_structure(data);
  if (spec.empty())
    throw std::invalid_argument("no structure given: pass --mask, --mesh or --grid, or set it in the data sidecar");
  return load_structure(spec);
}

void check_features(const Structure& s, const Eigen::MatrixXd& X, const fs::path& data) {
  if (s.op.cols() != X.cols())
    throw DataError("dimension mismatch: " + data.string() + " has " + std::to_string(X.cols()) +
                    " features but the structure (" + s.spec + ") has " + std::to_string(s.op.cols()));
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::uint64_t seed = 0;
  int datasets = 1;
  Index n = 200;
  int side = 50;
  std::string snr = "0.1";
};

double parse_snr(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw std::invalid_argument("bad snr '" + text + "'");
  return v;
}

std::string dataset_dir_name(std::uint64_t seed) {
  std::string s = std::to_string(seed);
  if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
  return "dataset_" + s;
}

int run_simulate(const SimulateArgs& a) {
  const double snr = parse_snr(a.snr);
  if (a.datasets < 1) throw std::invalid_argument("--datasets must be >= 1");
  for (int d = 0; d < a.datasets; ++d) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(d);
    const SyntheticDataset data = generate_dataset(seed, a.n, a.side, snr);
    const fs::path dir = fs::path(a.out) / dataset_dir_name(seed);
    save_dataset(dir, data);
    std::cout << dir.string() << '\n';
  }
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string out;
  StructureFlags structure;
  PenaltyFlags penalty;
  int k = 3;
  double eps = 1e-4;
  std::uint64_t seed = 0;
};

int run_fit(const FitArgs& a) {
  SpcaOptions options;
  options.components = a.k;
  options.eps = a.eps;
  options.seed = a.seed;
  options.weights = a.penalty.weights();
  if (!(a.eps > 0.0)) throw std::invalid_argument("--eps must be positive");

  const Eigen::MatrixXd X = io::read_csv_matrix(a.data);
  const Structure s = resolve_structure(a.structure, a.data);
  check_features(s, X, a.data);

  const SpcaModel model = fit(X, s.op, options);
  const fs::path out = a.out;
  save_model(out, model);
  auto meta = io::read_json(out / "meta.json");
  meta["structure"] = s.spec;
  io::write_json(out / "meta.json", meta);
  std::cout << "components " << model.components() << '/' << a.k << '\n';
  for (Index k = 0; k < model.components(); ++k)
    std::cout << "component " << k + 1 << " explained " << io::format_double(model.explained_variance[k])
              << '\n';
  if (model.truncated) std::cerr << "warning: fit stopped early, loading collapsed to zero\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> data;
  std::string out;
  StructureFlags structure;
  PenaltyFlags penalty;
  std::vector<std::string> methods;
  int k = 3;
  double eps = 1e-4;
  std::uint64_t seed = 0;
  int folds = 0;
  int workers = 1;
  bool tune = false;
};

std::optional<Eigen::MatrixXd> ground_truth(const fs::path& data) {
  const fs::path v = data.parent_path() / "V_true.csv";
  if (!fs::exists(v)) return std::nullopt;
  return io::read_csv_matrix(v);
}

Index train_rows(const fs::path& data, Index n) {
  const fs::path meta = data.parent_path() / "meta.json";
  if (fs::exists(meta)) {
    const auto j = io::read_json(meta);
    if (j.contains("train_rows")) return j.at("train_rows").get<Index>();
  }
  return n / 2;
}

// "name=global_weight,l1_ratio,tv_ratio"
std::pair<std::string, PenaltyWeights> parse_method(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("bad method '" + text + "', expected name=g,l1,tv");
  std::vector<double> v;
  std::stringstream ss(text.substr(eq + 1));
  std::string part;
  while (std::getline(ss, part, ',')) v.push_back(parse_snr(part));
  if (v.size() != 3) throw std::invalid_argument("bad method '" + text + "', expected name=g,l1,tv");
  return {text.substr(0, eq), PenaltyWeights::from_ratios(v[0], v[1], v[2])};
}

void write_tuning(const fs::path& path, const std::vector<TuningResult>& results) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "method,global_weight,l1_ratio,tv_ratio,reconstruction_error,mse,dice,sparsity_rule,selected\n";
  for (const auto& r : results)
    for (std::size_t c = 0; c < r.candidates.size(); ++c) {
      const auto& m = r.candidates[c];
      const auto w = m.weights.to_ratios();
      out << m.method << ',' << io::format_double(w.global_weight) << ',' << io::format_double(w.l1_ratio)
          << ',' << io::format_double(w.tv_ratio) << ','
          << (m.ok ? io::format_double(m.mean_reconstruction_error) : "") << ','
          << (m.mean_mse ? io::format_double(*m.mean_mse) : "") << ','
          << (m.dice ? io::format_double(m.dice->overall) : "") << ',' << (meets_sparsity_rule(m) ? 1 : 0)
          << ',' << (r.best && *r.best == c ? 1 : 0) << '\n';
    }
}

int run_evaluate(const EvaluateArgs& a) {
  if (a.data.empty()) throw std::invalid_argument("--data is required");
  if (!(a.eps > 0.0)) throw std::invalid_argument("--eps must be positive");
  if (a.folds == 1 || a.folds < 0) throw std::invalid_argument("--folds must be 0 or >= 2");
  if (a.folds >= 2 && a.data.size() != 1) throw std::invalid_argument("--folds needs exactly one --data");
  if (a.folds == 0 && a.data.size() < 2)
    throw std::invalid_argument("pass --folds for cross-validation or several --data files");

  std::vector<EvaluationTask> tasks;
  std::optional<Structure> structure;
  bool missing_truth = false;
  for (const std::string& path : a.data) {
    const Eigen::MatrixXd X = io::read_csv_matrix(path);
    if (!structure) structure = resolve_structure(a.structure, path);
    check_features(*structure, X, path);
    const auto truth = ground_truth(path);
    if (truth && truth->rows() != X.cols())
      throw DataError("ground truth next to " + path + " has " + std::to_string(truth->rows()) + " features");
    missing_truth = missing_truth || !truth;
    if (a.folds >= 2) {
      tasks = kfold_tasks(X, a.folds, truth);
    } else {
      const Index tr = train_rows(path, X.rows());
      if (tr < 1 || tr >= X.rows()) throw DataError(path + ": train split leaves an empty half");
      tasks.push_back({fs::path(path).parent_path().filename().string(), X.topRows(tr),
                       X.bottomRows(X.rows() - tr), truth});
      if (tasks.back().label.empty()) tasks.back().label = path;
    }
  }
  if (missing_truth) std::cerr << "warning: no V_true.csv next to the data, MSE left empty\n";

  SpcaOptions options;
  options.components = a.k;
  options.eps = a.eps;
  options.seed = a.seed;

  std::vector<MethodEvaluation> methods;
  if (a.tune) {
    std::vector<TuningResult> tuned;
    for (const bool with_tv : {false, true}) {
      const std::string name = with_tv ? "spca-tv" : "elasticnet";
      tuned.push_back(tune_weights(name, tasks, structure->op, penalty_grid(GridSpec{}, with_tv), options, a.workers));
      if (!tuned.back().best) {
        std::cerr << "warning: no " << name << " setting satisfies the sparsity rule\n";
        continue;
      }
      methods.push_back(tuned.back().candidates[*tuned.back().best]);
    }
    write_tuning(fs::path(a.out).replace_extension(".tuning.csv"), tuned);
  } else if (!a.methods.empty()) {
    for (const auto& text : a.methods) {
      const auto [name, weights] = parse_method(text);
      options.weights = weights;
      methods.push_back(evaluate_method(name, tasks, structure->op, options, a.workers));
    }
  } else {
    options.weights = a.penalty.weights();
    methods.push_back(evaluate_method("model", tasks, structure->op, options, a.workers));
  }

  write_report(a.out, methods);
  bool failed = false;
  for (const auto& m : methods) {
    std::cout << m.method << " reconstruction_error " << io::format_double(m.mean_reconstruction_error);
    if (m.mean_mse) std::cout << " mse " << io::format_double(*m.mean_mse);
    if (m.dice) std::cout << " dice " << io::format_double(m.dice->overall);
    std::cout << '\n';
    for (const auto& t : m.tasks)
      if (!t.ok) {
        std::cerr << m.method << ' ' << t.label << ": " << t.error << '\n';
        failed = true;
      }
  }
  return failed ? kExitConvergence : 0;
}

// ---- export-maps -----------------------------------------------------------

struct ExportArgs {
  std::string model;
  std::string out;
  StructureFlags structure;
};

void write_pgm(const fs::path& path, int width, int height, const std::vector<int>& pixels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out << (x > 0 ? " " : "") << pixels[static_cast<std::size_t>(y * width + x)];
    out << '\n';
  }
}

// Non-zero values min-max scaled to [0, 255]; exact zeros and cells outside
// the mask are mid-gray.
std::vector<int> gray_levels(const Eigen::VectorXd& v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index j = 0; j < v.size(); ++j)
    if (v[j] != 0.0) {
      lo = std::min(lo, v[j]);
      hi = std::max(hi, v[j]);
    }
  std::vector<int> g(static_cast<std::size_t>(v.size()), 128);
  for (Index j = 0; j < v.size(); ++j) {
    if (v[j] == 0.0) continue;
    g[static_cast<std::size_t>(j)] = hi > lo ? static_cast<int>(std::lround(255.0 * (v[j] - lo) / (hi - lo))) : 255;
  }
  return g;
}

int run_export(const ExportArgs& a) {
  const fs::path model_dir = a.model;
  const SpcaModel model = load_model(model_dir);
  std::string spec = structure_spec(a.structure);
  if (spec.empty()) {
    const auto meta = io::read_json(model_dir / "meta.json");
    if (meta.contains("structure")) spec = meta.at("structure").get<std::string>();
  }
  if (spec.empty()) throw std::invalid_argument("no structure given: pass --mask, --mesh or --grid");
  const Structure s = load_structure(spec);
  if (s.op.cols() != model.features())
    throw DataError("dimension mismatch: model has " + std::to_string(model.features()) +
                    " features but the structure has " + std::to_string(s.op.cols()));
  const fs::path out = a.out;
  io::ensure_directory(out);

  for (Index k = 0; k < model.components(); ++k) {
    const std::string stem = "component_" + std::to_string(k + 1);
    if (s.mesh) {
      std::ofstream csv(out / (stem + ".csv"));
      if (!csv) throw DataError("cannot write " + (out / (stem + ".csv")).string());
      csv << "vertex,x,y,z,loading\n";
      for (std::size_t i = 0; i < s.mesh->vertices.size(); ++i) {
        const auto& p = s.mesh->vertices[i];
        csv << i << ',' << io::format_double(p[0]) << ',' << io::format_double(p[1]) << ','
            << io::format_double(p[2]) << ',' << io::format_double(model.V(static_cast<Index>(i), k)) << '\n';
      }
      std::cout << (out / (stem + ".csv")).string() << '\n';
      continue;
    }
    const GridMask& mask = *s.mask;
    const GridDims d = mask.dims();
    const std::vector<int> levels = gray_levels(model.V.col(k));
    for (int z = 0; z < d.nk; ++z) {
      // Rows of the image follow j, columns follow i.
      std::vector<int> pixels(static_cast<std::size_t>(d.ni * d.nj), 128);
      for (int j = 0; j < d.nj; ++j)
        for (int i = 0; i < d.ni; ++i) {
          const Index f = mask.feature_index(i, j, z);
          if (f >= 0) pixels[static_cast<std::size_t>(j * d.ni + i)] = levels[static_cast<std::size_t>(f)];
        }
      const std::string name = d.nk > 1 ? stem + "_z" + std::to_string(z) + ".pgm" : stem + ".pgm";
      write_pgm(out / name, d.ni, d.nj, pixels);
      std::cout << (out / name).string() << '\n';
    }
  }
  return 0;
}

// Flat key=value file; '#' starts a comment. Values become arguments placed
// before the command-line ones so that explicit flags win.
std::vector<std::string> config_arguments(const fs::path& path, const CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::vector<std::string> args;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      std::cerr << "warning: " << path.string() << ": key '" << key << "' is not used by " << sub->get_name() << '\n';
      continue;
    }
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1") args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured sparse PCA with total-variation and elastic-net penalties", "spcatv"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config;

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic dot datasets");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "First dataset seed")->capture_default_str();
  simulate->add_option("--datasets", sim.datasets, "Number of datasets (consecutive seeds)")->capture_default_str();
  simulate->add_option("--n", sim.n, "Samples per dataset")->capture_default_str();
  simulate->add_option("--side", sim.side, "Image side length")->capture_default_str();
  simulate->add_option("--snr", sim.snr, "Signal-to-noise ratio (Frobenius), or inf")->capture_default_str();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write it with solver traces");
  fit_cmd->add_option("--data", fa.data, "Data CSV, one sample per row")->required();
  fit_cmd->add_option("--out", fa.out, "Model directory")->required();
  add_structure_flags(fit_cmd, fa.structure);
  add_penalty_flags(fit_cmd, fa.penalty);
  fit_cmd->add_option("--k", fa.k, "Number of components")->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--eps", fa.eps, "Solver precision")->capture_default_str();
  fit_cmd->add_option("--seed", fa.seed, "Random seed")->capture_default_str();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated or multi-dataset evaluation");
  evaluate->add_option("--data", ea.data, "Data CSV (repeat for several datasets)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evaluate->add_option("--out", ea.out, "Report CSV")->required();
  add_structure_flags(evaluate, ea.structure);
  add_penalty_flags(evaluate, ea.penalty);
  evaluate->add_option("--method", ea.methods, "Method as name=global_weight,l1_ratio,tv_ratio (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evaluate->add_flag("--tune", ea.tune, "Grid-tune elastic-net and TV weights under the sparsity rule");
  evaluate->add_option("--k", ea.k, "Number of components")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--eps", ea.eps, "Solver precision")->capture_default_str();
  evaluate->add_option("--seed", ea.seed, "Random seed")->capture_default_str();
  evaluate->add_option("--folds", ea.folds, "Cross-validation folds (single dataset)")->capture_default_str();
  evaluate->add_option("--workers", ea.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  ExportArgs xa;
  auto* export_maps = app.add_subcommand("export-maps", "Write loading maps as PGM images (CSV for meshes)");
  export_maps->add_option("--model", xa.model, "Model directory")->required();
  export_maps->add_option("--out", xa.out, "Output directory")->required();
  add_structure_flags(export_maps, xa.structure);

  for (CLI::App* sub : {simulate, fit_cmd, evaluate, export_maps})
    sub->add_option("--config", config, "Flat key=value file; flags override it");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // Splice config-file values in right after the subcommand name.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      else continue;
      CLI::App* sub = app.get_subcommand_no_throw(args[0]);
      if (sub == nullptr) break;
      const auto extra = config_arguments(path, sub);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
      break;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dynamic_cast<const DataError*>(&e) ? kExitData : kExitUsage;
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fa);
    if (*evaluate) return run_evaluate(ea);
    if (*export_maps) return run_export(xa);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
