#pragma once

// Sampling-based checkers for the boundary conditions that characterise
// stochastic invariance of boxes, positive cones and polyhedra, and the
// comparison principle between two systems.
//
// The conditions quantify over every boundary point and time; the checkers
// evaluate them on deterministic low-discrepancy samples, so a Satisfied
// verdict is "no counterexample within the budget", reported with margins.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdeinv/core.hpp"

namespace sdeinv {

struct CheckConfig {
  std::size_t n_face_samples = 4096;
  std::size_t n_time_samples = 16;
  double t_max_check = 100.0;
  double eps_drift = 1e-9;  // one-sided: drift may undershoot by this much
  double eps_diff = 1e-12;  // two-sided absolute
  std::uint64_t sampler_seed = 0;
  std::size_t max_witnesses_per_face = 8;

  void validate() const;
};

enum class Verdict { Satisfied, Violated };
enum class QuantityKind { DriftSign, DiffusionNonzero };

std::string to_string(Verdict v);
std::string to_string(QuantityKind k);

struct Witness {
  std::size_t face = 0;
  std::size_t time_index = 0;
  std::size_t sample_index = 0;
  double t = 0.0;
  Vector x;
  Vector y;  // partner state; comparison checks only
  QuantityKind kind = QuantityKind::DriftSign;
  std::size_t column = 0;  // noise column for diffusion witnesses
  double value = 0.0;      // drift value (or drift difference) / offending diffusion entry
};

struct FaceReport {
  std::size_t index = 0;
  std::string side;         // "lower", "upper", "hyperplane" or "pair"
  std::size_t coordinate = 0;  // constrained coordinate, or half-space index
  double bound = 0.0;          // face position for box faces
  std::size_t n_samples = 0;   // state samples (times are extra)
  double min_drift_margin = kInf;
  double max_diffusion_abs = 0.0;
  std::size_t n_violations = 0;
  std::vector<Witness> witnesses;  // first max_witnesses_per_face, in (time, sample) order
};

struct CheckReport {
  std::string check;  // "box", "positivity", "polyhedron", "comparison"
  std::string system;
  Interpretation interpretation = Interpretation::Ito;
  Verdict verdict = Verdict::Satisfied;
  std::vector<FaceReport> faces;
  CheckConfig config;

  bool satisfied() const { return verdict == Verdict::Satisfied; }
  std::vector<Witness> witnesses() const;
  double max_diffusion_abs() const;
  double min_drift_margin() const;
};

/// Box faces {x_i = a_i} and {x_i = b_i}: f_i >= 0 on lower faces, f_i <= 0
/// on upper faces, g_ij = 0 on both. Conditions are checked on (f, g) as
/// given; they are the same under either interpretation.
CheckReport check_box(const SdeSystem& sys, const Box& box, const CheckConfig& cfg = {});

/// Cone {x_i >= 0, i in indices}; a box with a_i = 0, b_i = +inf.
CheckReport check_positivity(const SdeSystem& sys, const std::vector<std::size_t>& indices,
                             const CheckConfig& cfg = {});

/// Intersection of half-spaces H_{a,n}: <f, n> >= 0 and <g_j, n> = 0 on each
/// face. Normals are normalised before the tolerances are applied.
CheckReport check_polyhedron(const SdeSystem& sys, const Polyhedron& poly, const CheckConfig& cfg = {});

/// Pathwise ordering X_i >= Y_i for i in indices: f_i(t,x) >= f~_i(t,y) and
/// g_ij(t,x) = g~_ij(t,y) whenever x_i = y_i and x_k >= y_k for k in indices.
CheckReport check_comparison(const SdeSystem& sys_a, const SdeSystem& sys_b,
                             const std::vector<std::size_t>& indices, const CheckConfig& cfg = {});

/// Sample times: 0 followed by van der Corput points scaled to [0, t_max].
std::vector<double> check_times(const CheckConfig& cfg);

nlohmann::json to_json(const CheckReport& report);
nlohmann::json to_json(const CheckConfig& cfg);

}  // namespace sdeinv
