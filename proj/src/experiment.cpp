#include "spcatv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "spcatv/error.hpp"
#include "spcatv/io.hpp"

namespace spcatv {

std::vector<EvaluationTask> kfold_tasks(const Eigen::MatrixXd& X, int folds,
                                        const std::optional<Eigen::MatrixXd>& V_true) {
  const Index n = X.rows();
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (n < folds) throw DataError("fewer samples than folds");
  std::vector<EvaluationTask> tasks;
  for (int f = 0; f < folds; ++f) {
    const Index lo = n * f / folds;
    const Index hi = n * (f + 1) / folds;
    EvaluationTask t;
    t.label = "fold" + std::to_string(f + 1);
    t.test = X.middleRows(lo, hi - lo);
    t.train.resize(n - (hi - lo), X.cols());
    t.train.topRows(lo) = X.topRows(lo);
    t.train.bottomRows(n - hi) = X.bottomRows(n - hi);
    t.V_true = V_true;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<EvaluationTask> dataset_tasks(const std::vector<SyntheticDataset>& datasets) {
  std::vector<EvaluationTask> tasks;
  for (const auto& d : datasets)
    tasks.push_back({"seed" + std::to_string(d.seed), d.train(), d.test(), d.V_true});
  return tasks;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double zero_fraction(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 1.0;
  return static_cast<double>((v.array() == 0.0).count()) / static_cast<double>(v.size());
}

namespace {

constexpr double kMinZeroShare = 0.5;

bool sparse_enough(Index k, const Eigen::VectorXd& v) {
  return (k != 1 && k != 2) || zero_fraction(v) >= kMinZeroShare;
}

TaskResult run_task(const EvaluationTask& task, const GroupLinearOperator& op,
                    const SpcaOptions& options) {
  TaskResult r;
  r.label = task.label;
  try {
    const SpcaModel model = fit(task.train, op, options);
    if (model.aborted) {
      r.rejected = true;
      return r;
    }
    r.V = model.V;
    r.reconstruction_error = reconstruction_error(task.test, model);
    if (task.V_true) r.mse = loading_mse(model.V, *task.V_true);
    for (int k = 0; k < options.components; ++k) {
      if (k >= model.components()) {
        r.zero_fraction.push_back(1.0);
        continue;
      }
      r.zero_fraction.push_back(zero_fraction(model.V.col(k)));
    }
    r.ok = true;
  } catch (const ConvergenceError& e) {
    r.error = e.what();
  }
  return r;
}

void summarise(MethodEvaluation& m) {
  m.ok = !m.tasks.empty() && std::all_of(m.tasks.begin(), m.tasks.end(), [](const TaskResult& t) { return t.ok; });
  double err = 0.0;
  double mse = 0.0;
  std::size_t fitted = 0;
  std::size_t with_mse = 0;
  std::vector<Eigen::MatrixXd> loadings;
  for (const auto& t : m.tasks) {
    if (!t.ok) continue;
    ++fitted;
    err += t.reconstruction_error;
    if (t.mse) {
      mse += *t.mse;
      ++with_mse;
    }
    loadings.push_back(t.V);
  }
  m.mean_reconstruction_error = fitted ? err / static_cast<double>(fitted) : 0.0;
  m.mean_mse.reset();
  if (with_mse) m.mean_mse = mse / static_cast<double>(with_mse);
  m.dice.reset();
  if (loadings.size() >= 2) m.dice = stability_dice(loadings);
}

}  // namespace

MethodEvaluation evaluate_method(const std::string& method, const std::vector<EvaluationTask>& tasks,
                                 const GroupLinearOperator& op, const SpcaOptions& options,
                                 int workers) {
  MethodEvaluation m;
  m.method = method;
  m.weights = options.weights;
  m.tasks.resize(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) { m.tasks[i] = run_task(tasks[i], op, options); });
  summarise(m);
  return m;
}

std::vector<PenaltyWeights> penalty_grid(const GridSpec& grid, bool include_tv) {
  std::vector<PenaltyWeights> out;
  for (double g : grid.global_weights)
    for (double l1 : grid.ratios)
      for (double tv : grid.ratios) {
        if (include_tv != (tv > 0.0)) continue;
        if (!(l1 + tv < 1.0)) continue;
        out.push_back(PenaltyWeights::from_ratios(g, l1, tv));
      }
  return out;
}

bool meets_sparsity_rule(const MethodEvaluation& evaluation) {
  if (!evaluation.ok) return false;
  for (const auto& t : evaluation.tasks)
    for (std::size_t k = 1; k < std::min<std::size_t>(3, t.zero_fraction.size()); ++k)
      if (t.zero_fraction[k] < kMinZeroShare) return false;
  return true;
}

TuningResult tune_weights(const std::string& method, const std::vector<EvaluationTask>& tasks,
                          const GroupLinearOperator& op, const std::vector<PenaltyWeights>& grid,
                          const SpcaOptions& options, int workers) {
  TuningResult out;
  out.candidates.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    out.candidates[c].method = method;
    out.candidates[c].weights = grid[c];
    out.candidates[c].tasks.resize(tasks.size());
  }
  parallel_for(grid.size(), workers, [&](std::size_t c) {
    SpcaOptions o = options;
    o.weights = grid[c];
    o.accept_component = sparse_enough;
    auto& cand = out.candidates[c];
    bool rejected = false;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (rejected) {
        cand.tasks[t].label = tasks[t].label;
        cand.tasks[t].rejected = true;
        continue;
      }
      cand.tasks[t] = run_task(tasks[t], op, o);
      rejected = cand.tasks[t].rejected || !cand.tasks[t].ok;
    }
  });
  for (std::size_t c = 0; c < grid.size(); ++c) {
    summarise(out.candidates[c]);
    if (!meets_sparsity_rule(out.candidates[c])) continue;
    if (!out.best || out.candidates[c].mean_reconstruction_error <
                         out.candidates[*out.best].mean_reconstruction_error)
      out.best = c;
  }
  return out;
}

namespace {

std::string opt(const std::optional<double>& x) { return x ? io::format_double(*x) : ""; }

}  // namespace

void write_report(const std::filesystem::path& path, const std::vector<MethodEvaluation>& methods) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "method,task,reconstruction_error,mse,dice,global_weight,l1_ratio,tv_ratio,status\n";
  for (const auto& m : methods) {
    const auto r = m.weights.to_ratios();
    const std::string w = io::format_double(r.global_weight) + ',' + io::format_double(r.l1_ratio) +
                          ',' + io::format_double(r.tv_ratio);
    for (const auto& t : m.tasks)
      out << m.method << ',' << t.label << ','
          << (t.ok ? io::format_double(t.reconstruction_error) : "") << ',' << opt(t.mse) << ",,"
          << w << ',' << (t.ok ? "ok" : "failed") << '\n';
    out << m.method << ",mean," << io::format_double(m.mean_reconstruction_error) << ','
        << opt(m.mean_mse) << ',' << (m.dice ? io::format_double(m.dice->overall) : "") << ',' << w
        << ',' << (m.ok ? "ok" : "partial") << '\n';
  }
  for (std::size_t a = 0; a < methods.size(); ++a)
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      const auto& A = methods[a];
      const auto& B = methods[b];
      const std::string name = A.method + "-" + B.method;
      const std::size_t n = std::min(A.tasks.size(), B.tasks.size());
      for (std::size_t t = 0; t < n; ++t) {
        const auto& ta = A.tasks[t];
        const auto& tb = B.tasks[t];
        const bool ok = ta.ok && tb.ok;
        std::optional<double> dmse;
        if (ok && ta.mse && tb.mse) dmse = *ta.mse - *tb.mse;
        out << name << ',' << ta.label << ','
            << (ok ? io::format_double(ta.reconstruction_error - tb.reconstruction_error) : "") << ','
            << opt(dmse) << ",,,,," << (ok ? "paired" : "failed") << '\n';
      }
      std::optional<double> dmse;
      if (A.mean_mse && B.mean_mse) dmse = *A.mean_mse - *B.mean_mse;
      std::optional<double> ddice;
      if (A.dice && B.dice) ddice = A.dice->overall - B.dice->overall;
      out << name << ",mean,"
          << io::format_double(A.mean_reconstruction_error - B.mean_reconstruction_error) << ','
          << opt(dmse) << ',' << opt(ddice) << ",,,,paired\n";
    }
}

}  // namespace spcatv
