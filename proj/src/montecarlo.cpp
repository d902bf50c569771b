#include "sdeinv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace sdeinv {

namespace {

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any body is rethrown after all threads join.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct PathResult {
  bool failed = false;
  bool violated = false;
  double exit_time = 0.0;
  std::vector<Interval> extrema;
};

std::vector<std::size_t> summary_indices(std::size_t n_points, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t n = 0; n < n_points; n += stride) idx.push_back(n);
  if (idx.back() != n_points - 1) idx.push_back(n_points - 1);
  return idx;
}

}  // namespace

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw UsageError("nearest_rank: empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

EnsembleStats run_ensemble(const SdeSystem& sys, const SimConfig& cfg, std::size_t n_paths, const Box& box,
                           const EnsembleOptions& opts) {
  if (n_paths < 1) throw UsageError("run_ensemble: n_paths must be >= 1");
  if (opts.summary_stride < 1) throw UsageError("run_ensemble: summary_stride must be >= 1");
  if (!(opts.tol >= 0.0)) throw UsageError("run_ensemble: tol must be >= 0");
  box.validate(sys.m());
  if (cfg.x0.size() != sys.m()) throw UsageError("run_ensemble: initial state has wrong length");
  const Scheme scheme = resolve_scheme(sys, cfg);
  if (opts.dump_dir) std::filesystem::create_directories(*opts.dump_dir);

  const std::size_t m = sys.m();
  const std::size_t n_points = cfg.grid.n_steps() + 1;
  const auto kept = summary_indices(n_points, opts.summary_stride);
  // values[(point * m + coord) * n_paths + path]
  std::vector<double> values(kept.size() * m * n_paths, 0.0);
  std::vector<PathResult> results(n_paths);

  parallel_for(n_paths, opts.workers, [&](std::size_t p) {
    PathResult& res = results[p];
    PartialRun run{Trajectory{cfg.grid, Matrix(), p}, true, 0};
    try {
      run = simulate_partial(sys, cfg, WienerGrid(cfg.seed, p, cfg.grid, sys.r()));
    } catch (const ModelEvaluationError& e) {
      res.failed = true;
      res.violated = true;
      res.exit_time = e.t;
      return;
    }
    const Trajectory& traj = run.trajectory;
    if (opts.dump_dir) {
      const auto file = std::filesystem::path(*opts.dump_dir) / ("path_" + std::to_string(p) + ".csv");
      write_trajectory_csv(file.string(), traj, sys.coordinate_names());
    }
    // A blown-up path usually left the box earlier; record that crossing.
    for (std::size_t n = 0; n < traj.states.rows() && !res.violated; ++n) {
      if (!box.contains(traj.state(n), opts.tol)) {
        res.violated = true;
        res.exit_time = traj.grid.time(n);
      }
    }
    if (!run.completed) {
      res.failed = true;
      if (!res.violated) {
        res.violated = true;
        res.exit_time = cfg.grid.time(run.failed_step);
      }
      return;
    }
    res.extrema.assign(m, Interval{kInf, -kInf});
    for (std::size_t n = 0; n < n_points; ++n) {
      const auto x = traj.state(n);
      for (std::size_t i = 0; i < m; ++i) {
        res.extrema[i].lo = std::min(res.extrema[i].lo, x[i]);
        res.extrema[i].hi = std::max(res.extrema[i].hi, x[i]);
      }
    }
    for (std::size_t s = 0; s < kept.size(); ++s) {
      const auto x = traj.state(kept[s]);
      for (std::size_t i = 0; i < m; ++i) values[(s * m + i) * n_paths + p] = x[i];
    }
  });

  EnsembleStats stats;
  stats.system = sys.name();
  stats.scheme = to_string(scheme);
  stats.seed = cfg.seed;
  stats.n_paths = n_paths;
  stats.coordinate_names = sys.coordinate_names();
  stats.extrema.assign(m, Interval{kInf, -kInf});
  std::vector<std::size_t> completed;
  for (std::size_t p = 0; p < n_paths; ++p) {
    const PathResult& res = results[p];
    if (res.violated) {
      ++stats.n_violating;
      stats.first_exit_times.push_back({p, res.exit_time, res.failed});
    }
    if (res.failed) {
      ++stats.n_failed;
      continue;
    }
    completed.push_back(p);
    for (std::size_t i = 0; i < m; ++i) {
      stats.extrema[i].lo = std::min(stats.extrema[i].lo, res.extrema[i].lo);
      stats.extrema[i].hi = std::max(stats.extrema[i].hi, res.extrema[i].hi);
    }
  }
  stats.violation_fraction = static_cast<double>(stats.n_violating) / static_cast<double>(n_paths);

  for (std::size_t s : kept) stats.summary_times.push_back(cfg.grid.time(s));
  stats.summary.resize(m);
  if (!completed.empty()) {
    std::vector<double> sample(completed.size());
    for (std::size_t i = 0; i < m; ++i) {
      SeriesSummary& series = stats.summary[i];
      for (std::size_t s = 0; s < kept.size(); ++s) {
        const double* row = &values[(s * m + i) * n_paths];
        double sum = 0.0;
        for (std::size_t c = 0; c < completed.size(); ++c) {
          sample[c] = row[completed[c]];
          sum += sample[c];
        }
        series.mean.push_back(sum / static_cast<double>(completed.size()));
        std::sort(sample.begin(), sample.end());
        series.q05.push_back(nearest_rank(sample, 0.05));
        series.q50.push_back(nearest_rank(sample, 0.50));
        series.q95.push_back(nearest_rank(sample, 0.95));
      }
    }
  }
  return stats;
}

InterpretationGap compare_interpretations(const SdeSystem& sys, const SimConfig& cfg, std::size_t n_paths,
                                          std::size_t workers) {
  if (n_paths < 1) throw UsageError("compare_interpretations: n_paths must be >= 1");
  const SdeSystem ito = sys.with_interpretation(Interpretation::Ito);
  const SdeSystem strat = sys.with_interpretation(Interpretation::Stratonovich);
  SimConfig auto_cfg = cfg;
  auto_cfg.scheme = Scheme::Auto;
  auto_cfg.force_scheme = false;

  const std::size_t m = sys.m();
  std::vector<Vector> sq(n_paths);
  std::vector<char> failed(n_paths, 0);
  parallel_for(n_paths, workers, [&](std::size_t p) {
    try {
      const WienerGrid noise(cfg.seed, p, cfg.grid, sys.r());
      const Trajectory a = simulate(ito, auto_cfg, noise);
      const Trajectory b = simulate(strat, auto_cfg, noise);
      const auto xa = a.state(cfg.grid.n_steps());
      const auto xb = b.state(cfg.grid.n_steps());
      sq[p].resize(m);
      for (std::size_t i = 0; i < m; ++i) sq[p][i] = (xa[i] - xb[i]) * (xa[i] - xb[i]);
    } catch (const IntegrationError&) {
      failed[p] = 1;
    } catch (const ModelEvaluationError&) {
      failed[p] = 1;
    }
  });

  InterpretationGap gap;
  gap.n_paths = n_paths;
  gap.rms_gap.assign(m, 0.0);
  std::size_t used = 0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (failed[p]) {
      ++gap.n_failed;
      continue;
    }
    ++used;
    for (std::size_t i = 0; i < m; ++i) gap.rms_gap[i] += sq[p][i];
  }
  if (used == 0) throw IntegrationError("compare_interpretations: every path failed", 0, {});
  for (double& v : gap.rms_gap) v = std::sqrt(v / static_cast<double>(used));
  return gap;
}

nlohmann::json to_json(const EnsembleStats& stats) {
  using nlohmann::json;
  json exits = json::array();
  for (const auto& e : stats.first_exit_times) exits.push_back({{"path_id", e.path_id}, {"t", e.t}, {"failed", e.failed}});
  json extrema = json::array();
  json summary = json::object();
  for (std::size_t i = 0; i < stats.extrema.size(); ++i) {
    const auto& name = stats.coordinate_names.at(i);
    const bool have = std::isfinite(stats.extrema[i].lo);
    extrema.push_back({{"coordinate", name},
                       {"min", have ? json(stats.extrema[i].lo) : json(nullptr)},
                       {"max", have ? json(stats.extrema[i].hi) : json(nullptr)}});
    const auto& s = stats.summary.at(i);
    summary[name] = {{"mean", s.mean}, {"q05", s.q05}, {"q50", s.q50}, {"q95", s.q95}};
  }
  return {{"system", stats.system},
          {"scheme", stats.scheme},
          {"seed", stats.seed},
          {"n_paths", stats.n_paths},
          {"n_violating", stats.n_violating},
          {"n_failed", stats.n_failed},
          {"violation_fraction", stats.violation_fraction},
          {"first_exit_times", std::move(exits)},
          {"extrema", std::move(extrema)},
          {"summary", {{"t", stats.summary_times}, {"coordinates", std::move(summary)}}}};
}

}  // namespace sdeinv
