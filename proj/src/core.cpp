#include "sdeinv/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdeinv {

namespace {

std::string describe_state(double t, std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << ", x=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

std::string to_string(Interpretation interp) {
  return interp == Interpretation::Ito ? "ito" : "stratonovich";
}

Interpretation parse_interpretation(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ito") return Interpretation::Ito;
  if (lower == "stratonovich" || lower == "strat") return Interpretation::Stratonovich;
  throw UsageError("unknown interpretation '" + text + "' (expected ito or stratonovich)");
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

SdeSystem::SdeSystem(Definition def) : def_(std::move(def)) {
  if (def_.m == 0) throw UsageError("SdeSystem: state dimension m must be positive");
  if (!def_.drift) throw UsageError("SdeSystem: drift field is required");
  if (def_.sampling_ranges.empty()) {
    def_.sampling_ranges.assign(def_.m, kDefaultSamplingRange);
  } else if (def_.sampling_ranges.size() != def_.m) {
    throw UsageError("SdeSystem: sampling_ranges must have one entry per coordinate");
  }
  for (const auto& range : def_.sampling_ranges) {
    if (!(range.hi > range.lo) || !std::isfinite(range.lo) || !std::isfinite(range.hi))
      throw UsageError("SdeSystem: sampling ranges must be finite with hi > lo");
  }
  if (def_.coordinate_names.empty()) {
    for (std::size_t i = 0; i < def_.m; ++i) def_.coordinate_names.push_back("x_" + std::to_string(i + 1));
  } else if (def_.coordinate_names.size() != def_.m) {
    throw UsageError("SdeSystem: coordinate_names must have one entry per coordinate");
  }
}

SdeSystem SdeSystem::with_interpretation(Interpretation interp) const {
  Definition def = def_;
  def.interpretation = interp;
  return SdeSystem(std::move(def));
}

SdeSystem SdeSystem::with_name(std::string name) const {
  Definition def = def_;
  def.name = std::move(name);
  return SdeSystem(std::move(def));
}

void SdeSystem::diffusion_into(double t, std::span<const double> x, std::span<double> out) const {
  if (def_.diffusion) {
    def_.diffusion(t, x, out);
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
}

void SdeSystem::jacobian_into(double t, std::span<const double> x, std::span<double> out) const {
  if (!def_.diffusion) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (!def_.diffusion_jacobian)
    throw UsageError("system '" + def_.name + "' has no analytic diffusion Jacobian");
  def_.diffusion_jacobian(t, x, out);
}

Vector eval_drift(const SdeSystem& sys, double t, std::span<const double> x) {
  if (x.size() != sys.m())
    throw UsageError("eval_drift: state has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(sys.m()));
  Vector out(sys.m(), 0.0);
  sys.drift_into(t, x, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]))
      throw ModelEvaluationError("non-finite drift component " + std::to_string(i) + " at " +
                                     describe_state(t, x),
                                 t, Vector(x.begin(), x.end()), i);
  }
  return out;
}

Matrix eval_diffusion(const SdeSystem& sys, double t, std::span<const double> x) {
  if (x.size() != sys.m())
    throw UsageError("eval_diffusion: state has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(sys.m()));
  Matrix g(sys.m(), sys.r());
  sys.diffusion_into(t, x, g.data());
  auto data = g.data();
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!std::isfinite(data[n]))
      throw ModelEvaluationError("non-finite diffusion entry (" + std::to_string(n / sys.r()) + "," +
                                     std::to_string(n % sys.r()) + ") at " + describe_state(t, x),
                                 t, Vector(x.begin(), x.end()), n);
  }
  return g;
}

SdeSystem zero_system(std::size_t m, std::size_t r, Interpretation interp) {
  SdeSystem::Definition def;
  def.name = "zero";
  def.m = m;
  def.r = r;
  def.drift = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  def.diffusion = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  def.diffusion_jacobian = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  def.interpretation = interp;
  return SdeSystem(std::move(def));
}

// ---------------------------------------------------------------------------

void Box::validate(std::size_t m) const {
  if (indices.empty()) throw UsageError("box: constrained index set is empty");
  if (lower.size() != indices.size() || upper.size() != indices.size())
    throw UsageError("box: lower/upper must have one entry per constrained index");
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw UsageError("box: duplicate constrained index");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= m)
      throw UsageError("box: index " + std::to_string(indices[k]) + " out of range for m=" + std::to_string(m));
    if (std::isnan(lower[k]) || std::isnan(upper[k])) throw UsageError("box: NaN bound");
    if (lower[k] == kInf || upper[k] == -kInf) throw UsageError("box: empty coordinate range");
    if (!(upper[k] > lower[k]))
      throw UsageError("box: upper bound must exceed lower bound on index " + std::to_string(indices[k]));
  }
}

bool Box::contains(std::span<const double> x, double tol) const {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double v = x[indices[k]];
    if (!(v >= lower[k] - tol && v <= upper[k] + tol)) return false;
  }
  return true;
}

void Polyhedron::validate(std::size_t m) const {
  for (std::size_t nu = 0; nu < halfspaces.size(); ++nu) {
    const auto& h = halfspaces[nu];
    if (h.point.size() != m || h.normal.size() != m)
      throw UsageError("polyhedron: half-space " + std::to_string(nu) + " has wrong dimension");
    double norm2 = 0.0;
    for (double c : h.normal) norm2 += c * c;
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw UsageError("polyhedron: half-space " + std::to_string(nu) + " has a zero normal");
  }
  if (interior_point && interior_point->size() != m)
    throw UsageError("polyhedron: interior point has wrong dimension");
}

bool Polyhedron::contains(std::span<const double> x, double tol) const {
  for (const auto& h : halfspaces) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - h.point[i]) * h.normal[i];
    if (s < -tol) return false;
  }
  return true;
}

Polyhedron Polyhedron::from_box(const Box& box, std::size_t m) {
  box.validate(m);
  Polyhedron poly;
  for (std::size_t k = 0; k < box.indices.size(); ++k) {
    const std::size_t i = box.indices[k];
    if (std::isfinite(box.lower[k])) {
      HalfSpace h{Vector(m, 0.0), Vector(m, 0.0)};
      h.point[i] = box.lower[k];
      h.normal[i] = 1.0;
      poly.halfspaces.push_back(std::move(h));
    }
    if (std::isfinite(box.upper[k])) {
      HalfSpace h{Vector(m, 0.0), Vector(m, 0.0)};
      h.point[i] = box.upper[k];
      h.normal[i] = -1.0;
      poly.halfspaces.push_back(std::move(h));
    }
  }
  return poly;
}

// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(double t0, double t_end, std::size_t n_steps)
    : t0_(t0), t_end_(t_end), n_steps_(n_steps), dt_(0.0) {
  if (!std::isfinite(t0) || t0 < 0.0) throw UsageError("time grid: t0 must be finite and >= 0");
  if (!std::isfinite(t_end) || !(t_end > t0)) throw UsageError("time grid: t_end must exceed t0");
  if (n_steps == 0) throw UsageError("time grid: n_steps must be positive");
  dt_ = (t_end - t0) / static_cast<double>(n_steps);
  if (!(dt_ > 0.0)) throw UsageError("time grid: step underflow");
}

double TimeGrid::time(std::size_t n) const {
  if (n >= n_steps_) return t_end_;
  return t0_ + static_cast<double>(n) * dt_;
}

}  // namespace sdeinv
