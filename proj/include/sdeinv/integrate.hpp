#pragma once

// Fixed-step strong integrators driven by reproducible Wiener increments.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sdeinv/core.hpp"

namespace sdeinv {

/// Discretised r-dimensional Wiener path. Increment (n, k) ~ N(0, dt) is the
/// normal quantile of the Philox block keyed by seed with counter
/// (k, n, path_id lo, path_id hi), scaled by sqrt(dt).
class WienerGrid {
 public:
  WienerGrid(std::uint64_t seed, std::uint64_t path_id, TimeGrid grid, std::size_t r);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_id() const { return path_id_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t r() const { return increments_.cols(); }

  /// Row n holds dW over [t_n, t_{n+1}].
  std::span<const double> increment(std::size_t n) const {
    return increments_.data().subspan(n * increments_.cols(), increments_.cols());
  }
  const Matrix& increments() const { return increments_; }

  /// W(t_n) - W(t_0) for component k, summed in step order.
  double cumulative(std::size_t n, std::size_t k) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_id_;
  TimeGrid grid_;
  Matrix increments_;
};

enum class Scheme { EulerMaruyama, EulerHeun, Auto };
enum class ClampPolicy { None, ReportOnly };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);

struct SimConfig {
  TimeGrid grid{0.0, 1.0, 1};
  Vector x0;
  Scheme scheme = Scheme::Auto;
  std::uint64_t seed = 0;
  ClampPolicy clamp_policy = ClampPolicy::ReportOnly;
  /// Allow Euler-Maruyama on a Stratonovich system or Heun on an Ito one.
  bool force_scheme = false;
};

/// Scheme actually used for `sys` under `cfg`; throws UsageError on a
/// scheme/interpretation mismatch unless forced.
Scheme resolve_scheme(const SdeSystem& sys, const SimConfig& cfg);

/// Euler-Maruyama: X+ = X + f dt + g dW.
/// Euler-Heun:     X~ = X + f dt + g dW,  X+ = X + f dt + (g(t,X) + g(t+dt,X~))/2 dW.
Trajectory simulate(const SdeSystem& sys, const SimConfig& cfg, const WienerGrid& noise);

struct PartialRun {
  Trajectory trajectory;  // rows up to the last finite state
  bool completed = true;
  std::size_t failed_step = 0;  // first step whose result was non-finite
};

/// As simulate, but a non-finite state ends the run instead of throwing.
PartialRun simulate_partial(const SdeSystem& sys, const SimConfig& cfg, const WienerGrid& noise);

/// Forward Euler on the drift alone (g treated as zero).
Trajectory simulate_deterministic(const SdeSystem& sys, const SimConfig& cfg);

/// `t,<names...>` header then one row per grid point, shortest round-trip decimals.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names);
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const std::vector<std::string>& names);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace sdeinv
