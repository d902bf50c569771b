#pragma once

// Classical Hodgkin-Huxley model with stochastic gating variables.
//
// State (x1, x2, x3, V): Na activation, K activation, Na inactivation and
// membrane potential in mV. Time is in ms. Noise acts on the gating rows
// only; the V row of the diffusion matrix is zero.

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdeinv/core.hpp"

namespace sdeinv::hh {

struct Params {
  double C = 0.01;      // uF/cm^2
  double g_Na = 1.2;    // mS/cm^2
  double g_K = 0.36;    // mS/cm^2
  double g_L = 0.03;    // mS/cm^2
  double I = 0.1;       // applied current
  double E_Na = 55.17;  // mV
  double E_K = -72.14;  // mV
  double E_L = -49.42;  // mV

  void validate() const;
};

struct NoiseSpec {
  enum class Kind { None, Additive, Multiplicative };
  Kind kind = Kind::None;
  std::array<double, 3> sigma{0.0, 0.0, 0.0};

  static NoiseSpec none() { return {}; }
  static NoiseSpec additive(double s) { return {Kind::Additive, {s, s, s}}; }
  static NoiseSpec multiplicative(double s) { return {Kind::Multiplicative, {s, s, s}}; }

  void validate() const;
};

/// Activation rate alpha_i(V) in 1/ms, gate i in 1..3. The 0/0 points of
/// alpha_1 (V = -35) and alpha_2 (V = -50) use the continuous extension.
double rate_alpha(int gate, double V);
/// Inactivation rate beta_i(V) in 1/ms, gate i in 1..3.
double rate_beta(int gate, double V);

/// Width of the band around a removable singularity handled by the series branch.
inline constexpr double kSingularityBand = 1e-7;

inline constexpr std::size_t kStateDim = 4;
inline constexpr std::size_t kNoiseDim = 3;
inline constexpr std::size_t kVoltage = 3;

SdeSystem make_system(const Params& params, const NoiseSpec& noise,
                      Interpretation interp = Interpretation::Ito, std::string name = "hh");

struct Metadata {
  Box box;                            // [0,1]^3 on the gating coordinates
  std::vector<Interval> sampling_ranges;
  Interval voltage_range;
  Vector x0;                          // resting state at V = -60 mV
  double horizon = 100.0;             // ms
};

Metadata metadata();

/// Closed form of the drift correction for this noise: sigma_i^2 x_i(1-x_i)(1-2x_i)
/// on gating rows for multiplicative noise, zero otherwise.
Vector expected_correction(const NoiseSpec& noise, std::span<const double> x);

}  // namespace sdeinv::hh

namespace sdeinv {

/// A built-in model plus the parameters it was built from.
struct ModelSpec {
  std::string name;  // "hh-det", "hh-additive", "hh-logistic"
  hh::Params params;
  hh::NoiseSpec noise;
  Interpretation interpretation = Interpretation::Ito;
};

std::vector<std::string> model_names();

/// Registry lookup; `sigma` applies to all gating rows (ignored for hh-det).
ModelSpec model_spec(const std::string& name, double sigma = 0.5,
                     Interpretation interp = Interpretation::Ito);

/// Overlays fields from a JSON model description onto `spec`. Recognised keys:
/// "model", "sigma" (number or 3-array), "interpretation", "params" {C, g_Na, ...}.
ModelSpec apply_model_json(ModelSpec spec, const nlohmann::json& j);

SdeSystem build_model(const ModelSpec& spec);

}  // namespace sdeinv
