#pragma once

// Core data model: SDE systems as evaluable fields, candidate invariant
// regions, time grids and trajectories.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdeinv {

using Vector = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix. Only what the library needs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad arguments, inconsistent dimensions, unknown names.
struct UsageError : Error {
  using Error::Error;
};

/// A drift/diffusion field produced a non-finite or mis-shaped value.
struct ModelEvaluationError : Error {
  ModelEvaluationError(const std::string& what, double t, Vector x, std::size_t index)
      : Error(what), t(t), x(std::move(x)), index(index) {}
  double t;
  Vector x;
  std::size_t index;
};

/// The numerical state became non-finite during time stepping.
struct IntegrationError : Error {
  IntegrationError(const std::string& what, std::size_t step, Vector last_finite_state)
      : Error(what), step(step), last_finite_state(std::move(last_finite_state)) {}
  std::size_t step;
  Vector last_finite_state;
};

// ---------------------------------------------------------------------------
// SDE systems
// ---------------------------------------------------------------------------

enum class Interpretation { Ito, Stratonovich };

std::string to_string(Interpretation interp);
Interpretation parse_interpretation(const std::string& text);

/// f(t, x) written into `out` (length m).
using DriftField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// g(t, x) written row-major into `out` (length m*r, entry (i,k) at i*r + k).
using DiffusionField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// dg/dx written into `out` (length m*m*r): entry d g_ik / d x_j at (j*m + i)*r + k.
using DiffusionJacobianField =
    std::function<void(double t, std::span<const double> x, std::span<double> out)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// dX = f(t,X) dt + g(t,X) dW  (or o dW under the Stratonovich reading).
///
/// Immutable after construction; copies share the underlying callables, which
/// must be pure functions of (t, x).
class SdeSystem {
 public:
  struct Definition {
    std::string name;
    std::size_t m = 0;
    std::size_t r = 0;
    DriftField drift;
    DiffusionField diffusion;                        // empty means g == 0
    DiffusionJacobianField diffusion_jacobian;       // optional analytic dg/dx
    Interpretation interpretation = Interpretation::Ito;
    std::vector<Interval> sampling_ranges;           // per-coordinate plausibility range
    std::vector<std::string> coordinate_names;       // defaults to x_1..x_m
  };

  explicit SdeSystem(Definition def);

  const std::string& name() const { return def_.name; }
  std::size_t m() const { return def_.m; }
  std::size_t r() const { return def_.r; }
  Interpretation interpretation() const { return def_.interpretation; }
  bool has_diffusion() const { return static_cast<bool>(def_.diffusion) && def_.r > 0; }
  bool has_analytic_jacobian() const { return static_cast<bool>(def_.diffusion_jacobian); }
  const std::vector<Interval>& sampling_ranges() const { return def_.sampling_ranges; }
  const std::vector<std::string>& coordinate_names() const { return def_.coordinate_names; }
  const Definition& definition() const { return def_; }

  /// Copy with a different interpretation tag; fields are shared.
  SdeSystem with_interpretation(Interpretation interp) const;
  SdeSystem with_name(std::string name) const;

  // Unchecked in-place evaluation for hot loops; spans must be sized m, m*r, m*m*r.
  void drift_into(double t, std::span<const double> x, std::span<double> out) const {
    def_.drift(t, x, out);
  }
  void diffusion_into(double t, std::span<const double> x, std::span<double> out) const;
  void jacobian_into(double t, std::span<const double> x, std::span<double> out) const;

 private:
  Definition def_;
};

/// Default plausibility range for coordinates a model does not declare.
inline constexpr Interval kDefaultSamplingRange{-10.0, 10.0};

/// f(t, x); validates the input length and the finiteness of the output.
Vector eval_drift(const SdeSystem& sys, double t, std::span<const double> x);
/// g(t, x) as an m x r matrix; validated like eval_drift.
Matrix eval_diffusion(const SdeSystem& sys, double t, std::span<const double> x);

/// The zero system f == 0, g == 0 of the given shape.
SdeSystem zero_system(std::size_t m, std::size_t r, Interpretation interp = Interpretation::Ito);

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// {x : lower_k <= x_{index_k} <= upper_k}. Infinite bounds give one-sided faces.
struct Box {
  std::vector<std::size_t> indices;
  Vector lower;
  Vector upper;

  /// Throws UsageError unless indices are non-empty, unique, < m and every
  /// two-sided pair satisfies upper > lower.
  void validate(std::size_t m) const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
};

/// {x : <x - a, n> >= 0}.
struct HalfSpace {
  Vector point;
  Vector normal;
};

struct Polyhedron {
  std::vector<HalfSpace> halfspaces;
  std::optional<Vector> interior_point;

  void validate(std::size_t m) const;
  bool contains(std::span<const double> x, double tol = 0.0) const;

  /// The box written as an intersection of half-spaces (two per finite pair).
  static Polyhedron from_box(const Box& box, std::size_t m);
};

// ---------------------------------------------------------------------------
// Time discretisation and paths
// ---------------------------------------------------------------------------

class TimeGrid {
 public:
  TimeGrid(double t0, double t_end, std::size_t n_steps);

  double t0() const { return t0_; }
  double t_end() const { return t_end_; }
  std::size_t n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  /// t0 + n * dt, with the last point pinned to t_end.
  double time(std::size_t n) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double t0_;
  double t_end_;
  std::size_t n_steps_;
  double dt_;
};

struct Trajectory {
  TimeGrid grid;
  Matrix states;  // (n_steps + 1) x m
  std::size_t path_id = 0;

  std::span<const double> state(std::size_t n) const {
    return states.data().subspan(n * states.cols(), states.cols());
  }
};

bool all_finite(std::span<const double> v);

}  // namespace sdeinv
