#include "sdeinv/models.hpp"

#include <cmath>

namespace sdeinv::hh {

namespace {

// u / (1 - exp(-u/10)), continuous at u = 0 where it equals 10 + u/2 + O(u^2).
double linoid(double u) {
  if (std::fabs(u) < kSingularityBand) return 10.0 + 0.5 * u;
  return u / -std::expm1(-u / 10.0);
}

void check_gate(int gate) {
  if (gate < 1 || gate > 3) throw UsageError("gate index must be 1, 2 or 3 (got " + std::to_string(gate) + ")");
}

}  // namespace

void Params::validate() const {
  if (!(C > 0.0)) throw UsageError("HH parameters: capacitance C must be > 0");
  if (!(g_Na >= 0.0) || !(g_K >= 0.0) || !(g_L >= 0.0))
    throw UsageError("HH parameters: conductances must be >= 0");
  for (double v : {I, E_Na, E_K, E_L})
    if (!std::isfinite(v)) throw UsageError("HH parameters: non-finite value");
}

void NoiseSpec::validate() const {
  if (kind == Kind::None) return;
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("HH noise: sigma must be positive and finite");
}

double rate_alpha(int gate, double V) {
  check_gate(gate);
  switch (gate) {
    case 1: return 0.1 * linoid(V + 35.0);
    case 2: return 0.01 * linoid(V + 50.0);
    default: return 0.07 * std::exp(-0.05 * (V + 60.0));
  }
}

double rate_beta(int gate, double V) {
  check_gate(gate);
  switch (gate) {
    case 1: return 4.0 * std::exp(-0.0556 * (V + 60.0));
    case 2: return 0.125 * std::exp(-(V + 60.0) / 80.0);
    default: return 1.0 / (1.0 + std::exp(-0.1 * (V + 30.0)));
  }
}

SdeSystem make_system(const Params& params, const NoiseSpec& noise, Interpretation interp, std::string name) {
  params.validate();
  noise.validate();
  SdeSystem::Definition def;
  def.name = std::move(name);
  def.m = kStateDim;
  def.r = kNoiseDim;
  def.interpretation = interp;
  def.coordinate_names = {"x_1", "x_2", "x_3", "V"};
  def.sampling_ranges = metadata().sampling_ranges;

  def.drift = [p = params](double, std::span<const double> x, std::span<double> out) {
    const double V = x[kVoltage];
    for (int i = 0; i < 3; ++i) out[i] = rate_alpha(i + 1, V) * (1.0 - x[i]) - rate_beta(i + 1, V) * x[i];
    const double m3h = x[0] * x[0] * x[0] * x[2];
    const double n4 = (x[1] * x[1]) * (x[1] * x[1]);
    out[kVoltage] = (p.I - p.g_Na * m3h * (V - p.E_Na) - p.g_K * n4 * (V - p.E_K) - p.g_L * (V - p.E_L)) / p.C;
  };

  const auto sigma = noise.sigma;
  switch (noise.kind) {
    case NoiseSpec::Kind::None:
      break;
    case NoiseSpec::Kind::Additive:
      def.diffusion = [sigma](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < 3; ++i) out[i * kNoiseDim + i] = sigma[i];
      };
      def.diffusion_jacobian = [](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      };
      break;
    case NoiseSpec::Kind::Multiplicative:
      def.diffusion = [sigma](double, std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < 3; ++i) out[i * kNoiseDim + i] = sigma[i] * x[i] * (1.0 - x[i]);
      };
      def.diffusion_jacobian = [sigma](double, std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        // d g_ii / d x_i, stored at (j = i, row i, column i)
        for (std::size_t i = 0; i < 3; ++i)
          out[(i * kStateDim + i) * kNoiseDim + i] = sigma[i] * (1.0 - 2.0 * x[i]);
      };
      break;
  }
  return SdeSystem(std::move(def));
}

Metadata metadata() {
  Metadata md;
  md.box.indices = {0, 1, 2};
  md.box.lower = {0.0, 0.0, 0.0};
  md.box.upper = {1.0, 1.0, 1.0};
  md.voltage_range = {-100.0, 60.0};
  md.sampling_ranges = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, md.voltage_range};
  const double v_rest = -60.0;
  md.x0.resize(kStateDim);
  for (int i = 0; i < 3; ++i) {
    const double a = rate_alpha(i + 1, v_rest);
    md.x0[i] = a / (a + rate_beta(i + 1, v_rest));
  }
  md.x0[kVoltage] = v_rest;
  md.horizon = 100.0;
  return md;
}

Vector expected_correction(const NoiseSpec& noise, std::span<const double> x) {
  Vector h(kStateDim, 0.0);
  if (noise.kind != NoiseSpec::Kind::Multiplicative) return h;
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = noise.sigma[i];
    h[i] = s * s * x[i] * (1.0 - x[i]) * (1.0 - 2.0 * x[i]);
  }
  return h;
}

}  // namespace sdeinv::hh

namespace sdeinv {

std::vector<std::string> model_names() { return {"hh-det", "hh-additive", "hh-logistic"}; }

ModelSpec model_spec(const std::string& name, double sigma, Interpretation interp) {
  ModelSpec spec;
  spec.name = name;
  spec.interpretation = interp;
  if (name == "hh-det") {
    spec.noise = hh::NoiseSpec::none();
  } else if (name == "hh-additive") {
    spec.noise = hh::NoiseSpec::additive(sigma);
  } else if (name == "hh-logistic") {
    spec.noise = hh::NoiseSpec::multiplicative(sigma);
  } else {
    std::string known;
    for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown model '" + name + "'; available models: " + known);
  }
  spec.noise.validate();
  return spec;
}

ModelSpec apply_model_json(ModelSpec spec, const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("model description must be a JSON object");
  std::array<double, 3> sigma = spec.noise.sigma;
  if (spec.noise.kind == hh::NoiseSpec::Kind::None) sigma = {0.5, 0.5, 0.5};
  try {
    if (j.contains("sigma")) {
      const auto& s = j.at("sigma");
      if (s.is_array()) {
        if (s.size() != 3) throw UsageError("model description: sigma array must have 3 entries");
        for (std::size_t i = 0; i < 3; ++i) sigma[i] = s.at(i).get<double>();
      } else {
        sigma.fill(s.get<double>());
      }
    }
    if (j.contains("interpretation")) spec.interpretation = parse_interpretation(j.at("interpretation").get<std::string>());
    if (j.contains("model")) {
      const hh::Params keep = spec.params;
      spec = model_spec(j.at("model").get<std::string>(), sigma[0], spec.interpretation);
      spec.params = keep;
    }
    if (spec.noise.kind != hh::NoiseSpec::Kind::None) spec.noise.sigma = sigma;
    if (j.contains("params")) {
      const auto& p = j.at("params");
      auto read = [&](const char* key, double& field) {
        if (p.contains(key)) field = p.at(key).get<double>();
      };
      read("C", spec.params.C);
      read("g_Na", spec.params.g_Na);
      read("g_K", spec.params.g_K);
      read("g_L", spec.params.g_L);
      read("I", spec.params.I);
      read("E_Na", spec.params.E_Na);
      read("E_K", spec.params.E_K);
      read("E_L", spec.params.E_L);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("model description: ") + e.what());
  }
  spec.params.validate();
  spec.noise.validate();
  return spec;
}

SdeSystem build_model(const ModelSpec& spec) {
  return hh::make_system(spec.params, spec.noise, spec.interpretation, spec.name);
}

}  // namespace sdeinv
