#include "sdeinv/integrate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "sdeinv/random.hpp"

namespace sdeinv {

WienerGrid::WienerGrid(std::uint64_t seed, std::uint64_t path_id, TimeGrid grid, std::size_t r)
    : seed_(seed), path_id_(path_id), grid_(grid), increments_(grid.n_steps(), r) {
  const double sqrt_dt = std::sqrt(grid_.dt());
  const auto lo = static_cast<std::uint32_t>(path_id);
  const auto hi = static_cast<std::uint32_t>(path_id >> 32);
  for (std::size_t n = 0; n < grid_.n_steps(); ++n)
    for (std::size_t k = 0; k < r; ++k)
      increments_(n, k) =
          sqrt_dt * rng::normal(seed, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(n), lo, hi);
}

double WienerGrid::cumulative(std::size_t n, std::size_t k) const {
  double w = 0.0;
  for (std::size_t s = 0; s < n; ++s) w += increments_(s, k);
  return w;
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::EulerMaruyama: return "euler-maruyama";
    case Scheme::EulerHeun: return "euler-heun";
    case Scheme::Auto: return "auto";
  }
  return "auto";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "em" || text == "euler-maruyama") return Scheme::EulerMaruyama;
  if (text == "heun" || text == "euler-heun") return Scheme::EulerHeun;
  if (text == "auto") return Scheme::Auto;
  throw UsageError("unknown scheme '" + text + "' (expected auto, em or heun)");
}

Scheme resolve_scheme(const SdeSystem& sys, const SimConfig& cfg) {
  const Scheme natural =
      sys.interpretation() == Interpretation::Ito ? Scheme::EulerMaruyama : Scheme::EulerHeun;
  if (cfg.scheme == Scheme::Auto) return natural;
  if (cfg.scheme != natural && !cfg.force_scheme)
    throw UsageError("scheme " + to_string(cfg.scheme) + " is inconsistent with the " +
                     to_string(sys.interpretation()) + " interpretation of '" + sys.name() +
                     "' (set force_scheme to override)");
  return cfg.scheme;
}

namespace {

void check_inputs(const SdeSystem& sys, const SimConfig& cfg) {
  if (cfg.x0.size() != sys.m())
    throw UsageError("simulate: initial state has length " + std::to_string(cfg.x0.size()) + ", expected " +
                     std::to_string(sys.m()));
}

[[noreturn]] void non_finite(std::size_t step, const Matrix& states, std::size_t m) {
  const auto last = states.data().subspan(step * m, m);
  throw IntegrationError("non-finite state at step " + std::to_string(step + 1), step + 1,
                         Vector(last.begin(), last.end()));
}

}  // namespace

namespace {

/// Fills traj row by row; returns the number of completed steps, which is
/// less than n_steps only when a non-finite state appeared.
std::size_t integrate(const SdeSystem& sys, const SimConfig& cfg, const WienerGrid& noise, Trajectory& traj) {
  check_inputs(sys, cfg);
  if (!(noise.grid() == cfg.grid)) throw UsageError("simulate: noise grid differs from the simulation grid");
  if (noise.r() != sys.r())
    throw UsageError("simulate: noise has " + std::to_string(noise.r()) + " components, system expects " +
                     std::to_string(sys.r()));
  const Scheme scheme = resolve_scheme(sys, cfg);
  const std::size_t m = sys.m();
  const std::size_t r = sys.r();
  const TimeGrid& grid = cfg.grid;
  const double dt = grid.dt();

  traj = Trajectory{grid, Matrix(grid.n_steps() + 1, m), noise.path_id()};
  auto states = traj.states.data();
  std::copy(cfg.x0.begin(), cfg.x0.end(), states.begin());

  Vector f(m), g0(m * r), g1(m * r), pred(m);
  for (std::size_t n = 0; n < grid.n_steps(); ++n) {
    const double t = grid.time(n);
    const auto x = states.subspan(n * m, m);
    const auto next = states.subspan((n + 1) * m, m);
    const auto dw = noise.increment(n);
    sys.drift_into(t, x, f);
    sys.diffusion_into(t, x, g0);
    if (scheme == Scheme::EulerMaruyama) {
      for (std::size_t i = 0; i < m; ++i) {
        double noise_term = 0.0;
        for (std::size_t k = 0; k < r; ++k) noise_term += g0[i * r + k] * dw[k];
        next[i] = x[i] + f[i] * dt + noise_term;
      }
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        double noise_term = 0.0;
        for (std::size_t k = 0; k < r; ++k) noise_term += g0[i * r + k] * dw[k];
        pred[i] = x[i] + f[i] * dt + noise_term;
      }
      sys.diffusion_into(grid.time(n + 1), pred, g1);
      for (std::size_t i = 0; i < m; ++i) {
        double noise_term = 0.0;
        for (std::size_t k = 0; k < r; ++k) noise_term += 0.5 * (g0[i * r + k] + g1[i * r + k]) * dw[k];
        next[i] = x[i] + f[i] * dt + noise_term;
      }
    }
    if (!all_finite(next)) return n;
  }
  return grid.n_steps();
}

/// Keeps rows 0..n.
void truncate(Trajectory& traj, std::size_t n) {
  const std::size_t m = traj.states.cols();
  Matrix kept(n + 1, m);
  const auto src = traj.states.data();
  std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>((n + 1) * m), kept.data().begin());
  traj.states = std::move(kept);
}

}  // namespace

Trajectory simulate(const SdeSystem& sys, const SimConfig& cfg, const WienerGrid& noise) {
  Trajectory traj{cfg.grid, Matrix(), noise.path_id()};
  const std::size_t done = integrate(sys, cfg, noise, traj);
  if (done < cfg.grid.n_steps()) non_finite(done, traj.states, sys.m());
  return traj;
}

PartialRun simulate_partial(const SdeSystem& sys, const SimConfig& cfg, const WienerGrid& noise) {
  PartialRun run{Trajectory{cfg.grid, Matrix(), noise.path_id()}, true, 0};
  const std::size_t done = integrate(sys, cfg, noise, run.trajectory);
  if (done < cfg.grid.n_steps()) {
    run.completed = false;
    run.failed_step = done + 1;
    truncate(run.trajectory, done);
  }
  return run;
}

Trajectory simulate_deterministic(const SdeSystem& sys, const SimConfig& cfg) {
  check_inputs(sys, cfg);
  const std::size_t m = sys.m();
  const TimeGrid& grid = cfg.grid;
  const double dt = grid.dt();
  Trajectory traj{grid, Matrix(grid.n_steps() + 1, m), 0};
  auto states = traj.states.data();
  std::copy(cfg.x0.begin(), cfg.x0.end(), states.begin());
  Vector f(m);
  for (std::size_t n = 0; n < grid.n_steps(); ++n) {
    const auto x = states.subspan(n * m, m);
    const auto next = states.subspan((n + 1) * m, m);
    sys.drift_into(grid.time(n), x, f);
    for (std::size_t i = 0; i < m; ++i) next[i] = x[i] + f[i] * dt;
    if (!all_finite(next)) non_finite(n, traj.states, m);
  }
  return traj;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names) {
  const std::size_t m = traj.states.cols();
  if (names.size() != m) throw UsageError("trajectory CSV: expected " + std::to_string(m) + " column names");
  os << 't';
  for (const auto& name : names) os << ',' << name;
  os << '\n';
  for (std::size_t n = 0; n < traj.states.rows(); ++n) {
    os << format_double(traj.grid.time(n));
    for (double v : traj.state(n)) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj, names);
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace sdeinv
