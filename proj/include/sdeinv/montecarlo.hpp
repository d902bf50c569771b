#pragma once

// Ensemble simulation and empirical invariance statistics.
//
// Path p of an ensemble is driven by WienerGrid(seed, p, grid, r), so results
// depend only on (system, config, n_paths) and never on how paths are spread
// across workers. Reductions run in path-id order.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdeinv/core.hpp"
#include "sdeinv/integrate.hpp"

namespace sdeinv {

struct EnsembleOptions {
  std::size_t workers = 1;
  /// A path violates the box if a constrained coordinate leaves [a - tol, b + tol].
  double tol = 0.0;
  /// Summaries are taken every `summary_stride` grid points (the last point is always kept).
  std::size_t summary_stride = 1;
  /// When set, every path is written to <dir>/path_<id>.csv.
  std::optional<std::string> dump_dir;
};

struct ExitRecord {
  std::size_t path_id = 0;
  double t = 0.0;
  bool failed = false;  // integration error rather than a boundary crossing
};

struct SeriesSummary {
  Vector mean;
  Vector q05;
  Vector q50;
  Vector q95;
};

struct EnsembleStats {
  std::string system;
  std::string scheme;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_violating = 0;
  std::size_t n_failed = 0;
  double violation_fraction = 0.0;
  std::vector<ExitRecord> first_exit_times;  // violating paths, ascending path id
  std::vector<Interval> extrema;             // per coordinate, over completed paths
  Vector summary_times;
  std::vector<SeriesSummary> summary;        // per coordinate
  std::vector<std::string> coordinate_names;
};

/// Nearest-rank quantile of an ascending sample: element ceil(p * n) (1-based).
double nearest_rank(std::span<const double> sorted, double p);

EnsembleStats run_ensemble(const SdeSystem& sys, const SimConfig& cfg, std::size_t n_paths, const Box& box,
                           const EnsembleOptions& opts = {});

struct InterpretationGap {
  Vector rms_gap;  // per coordinate, endpoint
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
};

/// Simulates `sys` read as Ito (Euler-Maruyama) and read as Stratonovich
/// (Euler-Heun) on the same Wiener paths; returns the RMS endpoint gap.
InterpretationGap compare_interpretations(const SdeSystem& sys, const SimConfig& cfg, std::size_t n_paths,
                                          std::size_t workers = 1);

nlohmann::json to_json(const EnsembleStats& stats);

}  // namespace sdeinv
