#include "sdeinv/invariance.hpp"

#include <algorithm>
#include <cmath>

#include "sdeinv/random.hpp"

namespace sdeinv {

namespace {

constexpr std::size_t kInteriorSearchBudget = 1u << 16;
constexpr std::size_t kHitAndRunThinning = 4;
constexpr std::size_t kRayAttempts = 3;
// Stream tags for the hit-and-run chain.
constexpr std::uint32_t kTagDirection = 0x44495231u;
constexpr std::uint32_t kTagStep = 0x53544550u;

class FaceAccumulator {
 public:
  FaceAccumulator(FaceReport& face, const CheckConfig& cfg, bool& violated)
      : face_(face), cfg_(cfg), violated_(violated) {}

  void drift(double margin, double value, double t, std::size_t ti, std::size_t si,
             std::span<const double> x, std::span<const double> y = {}) {
    face_.min_drift_margin = std::min(face_.min_drift_margin, margin);
    if (margin < -cfg_.eps_drift) add(QuantityKind::DriftSign, 0, value, t, ti, si, x, y);
  }

  void diffusion(std::size_t column, double value, double t, std::size_t ti, std::size_t si,
                 std::span<const double> x, std::span<const double> y = {}) {
    const double a = std::fabs(value);
    face_.max_diffusion_abs = std::max(face_.max_diffusion_abs, a);
    if (a > cfg_.eps_diff) add(QuantityKind::DiffusionNonzero, column, value, t, ti, si, x, y);
  }

 private:
  void add(QuantityKind kind, std::size_t column, double value, double t, std::size_t ti, std::size_t si,
           std::span<const double> x, std::span<const double> y) {
    violated_ = true;
    ++face_.n_violations;
    if (face_.witnesses.size() >= cfg_.max_witnesses_per_face) return;
    Witness w;
    w.face = face_.index;
    w.time_index = ti;
    w.sample_index = si;
    w.t = t;
    w.x.assign(x.begin(), x.end());
    w.y.assign(y.begin(), y.end());
    w.kind = kind;
    w.column = column;
    w.value = value;
    face_.witnesses.push_back(std::move(w));
  }

  FaceReport& face_;
  const CheckConfig& cfg_;
  bool& violated_;
};

/// Evaluates f and g with finiteness checks, tagging errors with face context.
class FieldProbe {
 public:
  explicit FieldProbe(const SdeSystem& sys) : sys_(sys), f_(sys.m()), g_(sys.m() * sys.r()) {}

  void evaluate(double t, std::span<const double> x, const std::string& context) {
    sys_.drift_into(t, x, f_);
    for (std::size_t i = 0; i < f_.size(); ++i)
      if (!std::isfinite(f_[i]))
        throw ModelEvaluationError(context + ": non-finite drift component " + std::to_string(i), t,
                                   Vector(x.begin(), x.end()), i);
    sys_.diffusion_into(t, x, g_);
    for (std::size_t n = 0; n < g_.size(); ++n)
      if (!std::isfinite(g_[n]))
        throw ModelEvaluationError(context + ": non-finite diffusion entry " + std::to_string(n), t,
                                   Vector(x.begin(), x.end()), n);
  }

  double f(std::size_t i) const { return f_[i]; }
  double g(std::size_t i, std::size_t k) const { return g_[i * sys_.r() + k]; }
  std::span<const double> f() const { return f_; }

 private:
  const SdeSystem& sys_;
  Vector f_;
  Vector g_;
};

std::string face_context(const SdeSystem& sys, const FaceReport& face) {
  return "system '" + sys.name() + "', face " + std::to_string(face.index) + " (" + face.side + ", coordinate " +
         std::to_string(face.coordinate) + ")";
}

double width(const Interval& iv) { return iv.hi - iv.lo; }

/// Range to draw a coordinate from on a box face: the box bounds where
/// finite, the model's plausibility range otherwise.
Interval box_coordinate_range(const Interval& plausible, double lower, double upper) {
  const double span = width(plausible);
  Interval out = plausible;
  if (std::isfinite(lower) && std::isfinite(upper)) return {lower, upper};
  if (std::isfinite(lower)) {
    out.lo = lower;
    out.hi = plausible.hi > lower ? plausible.hi : lower + span;
  } else if (std::isfinite(upper)) {
    out.hi = upper;
    out.lo = plausible.lo < upper ? plausible.lo : upper - span;
  }
  return out;
}

CheckReport make_report(const std::string& check, const SdeSystem& sys, const CheckConfig& cfg) {
  CheckReport report;
  report.check = check;
  report.system = sys.name();
  report.interpretation = sys.interpretation();
  report.config = cfg;
  return report;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double slack(const HalfSpace& h, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - h.point[i]) * h.normal[i];
  return s;
}

}  // namespace

void CheckConfig::validate() const {
  if (n_face_samples < 1) throw UsageError("check config: n_face_samples must be >= 1");
  if (n_time_samples < 1) throw UsageError("check config: n_time_samples must be >= 1");
  if (!(t_max_check >= 0.0) || !std::isfinite(t_max_check))
    throw UsageError("check config: t_max_check must be finite and >= 0");
  if (!(eps_drift > 0.0)) throw UsageError("check config: eps_drift must be > 0");
  if (!(eps_diff > 0.0)) throw UsageError("check config: eps_diff must be > 0");
}

std::string to_string(Verdict v) { return v == Verdict::Satisfied ? "satisfied" : "violated"; }

std::string to_string(QuantityKind k) {
  return k == QuantityKind::DriftSign ? "drift_sign" : "diffusion_nonzero";
}

std::vector<Witness> CheckReport::witnesses() const {
  std::vector<Witness> all;
  for (const auto& face : faces) all.insert(all.end(), face.witnesses.begin(), face.witnesses.end());
  return all;
}

double CheckReport::max_diffusion_abs() const {
  double v = 0.0;
  for (const auto& face : faces) v = std::max(v, face.max_diffusion_abs);
  return v;
}

double CheckReport::min_drift_margin() const {
  double v = kInf;
  for (const auto& face : faces) v = std::min(v, face.min_drift_margin);
  return v;
}

std::vector<double> check_times(const CheckConfig& cfg) {
  std::vector<double> times;
  times.reserve(cfg.n_time_samples);
  for (std::size_t k = 0; k < cfg.n_time_samples; ++k)
    times.push_back(cfg.t_max_check * rng::radical_inverse(k, 2));
  return times;
}

// ---------------------------------------------------------------------------
// Box
// ---------------------------------------------------------------------------

CheckReport check_box(const SdeSystem& sys, const Box& box, const CheckConfig& cfg) {
  cfg.validate();
  box.validate(sys.m());
  const std::size_t m = sys.m();
  const std::size_t r = sys.r();
  const auto times = check_times(cfg);

  // Per-coordinate sampling ranges inside the box.
  std::vector<Interval> ranges = sys.sampling_ranges();
  for (std::size_t k = 0; k < box.indices.size(); ++k) {
    const std::size_t i = box.indices[k];
    ranges[i] = box_coordinate_range(ranges[i], box.lower[k], box.upper[k]);
  }

  CheckReport report = make_report("box", sys, cfg);
  bool violated = false;
  FieldProbe probe(sys);
  Vector x(m);

  for (std::size_t k = 0; k < box.indices.size(); ++k) {
    const std::size_t i = box.indices[k];
    for (int side = 0; side < 2; ++side) {
      const double bound = side == 0 ? box.lower[k] : box.upper[k];
      if (!std::isfinite(bound)) continue;

      FaceReport face;
      face.index = report.faces.size();
      face.side = side == 0 ? "lower" : "upper";
      face.coordinate = i;
      face.bound = bound;
      face.n_samples = cfg.n_face_samples;
      const std::string context = face_context(sys, face);
      FaceAccumulator acc(face, cfg, violated);

      // Precompute face points so every time slice sees the same set.
      std::vector<Vector> points(cfg.n_face_samples, Vector(m));
      for (std::size_t s = 0; s < cfg.n_face_samples; ++s) {
        unsigned dim = 0;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == i) {
            points[s][j] = bound;
            continue;
          }
          const double u = rng::halton(s, dim++, cfg.sampler_seed);
          points[s][j] = ranges[j].lo + u * width(ranges[j]);
        }
      }

      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        for (std::size_t s = 0; s < points.size(); ++s) {
          probe.evaluate(t, points[s], context);
          const double fi = probe.f(i);
          acc.drift(side == 0 ? fi : -fi, fi, t, ti, s, points[s]);
          for (std::size_t c = 0; c < r; ++c) acc.diffusion(c, probe.g(i, c), t, ti, s, points[s]);
        }
      }
      report.faces.push_back(std::move(face));
    }
  }
  if (report.faces.empty()) throw UsageError("check_box: box has no finite faces to sample");
  report.verdict = violated ? Verdict::Violated : Verdict::Satisfied;
  return report;
}

CheckReport check_positivity(const SdeSystem& sys, const std::vector<std::size_t>& indices,
                             const CheckConfig& cfg) {
  Box cone;
  cone.indices = indices;
  cone.lower.assign(indices.size(), 0.0);
  cone.upper.assign(indices.size(), kInf);
  CheckReport report = check_box(sys, cone, cfg);
  report.check = "positivity";
  return report;
}

// ---------------------------------------------------------------------------
// Polyhedron
// ---------------------------------------------------------------------------

namespace {

struct ChordLimits {
  double lo = -kInf;
  double hi = kInf;
};

/// Feasible step interval for p + lambda * d inside the half-spaces and box.
ChordLimits chord(const Polyhedron& poly, const std::vector<Interval>& box, std::span<const double> p,
                  std::span<const double> d) {
  ChordLimits lim;
  auto clip = [&](double s, double rate) {
    // constraint: s + lambda * rate >= 0
    if (rate > 0.0) {
      lim.lo = std::max(lim.lo, -s / rate);
    } else if (rate < 0.0) {
      lim.hi = std::min(lim.hi, -s / rate);
    }
  };
  for (const auto& h : poly.halfspaces) clip(slack(h, p), dot(d, h.normal));
  for (std::size_t j = 0; j < p.size(); ++j) {
    clip(p[j] - box[j].lo, d[j]);
    clip(box[j].hi - p[j], -d[j]);
  }
  return lim;
}

bool strictly_inside(const Polyhedron& poly, const std::vector<Interval>& box, std::span<const double> x) {
  for (const auto& h : poly.halfspaces)
    if (!(slack(h, x) > 0.0)) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!(x[j] > box[j].lo && x[j] < box[j].hi)) return false;
  return true;
}

Vector find_interior_point(const Polyhedron& poly, const std::vector<Interval>& box, std::uint64_t seed) {
  const std::size_t m = box.size();
  if (poly.interior_point) {
    // May lie outside the sampling box; hit_and_run widens the box to it.
    for (const auto& h : poly.halfspaces)
      if (!(slack(h, *poly.interior_point) > 0.0))
        throw UsageError("check_polyhedron: supplied interior point is not strictly inside the polyhedron");
    return *poly.interior_point;
  }
  Vector x(m);
  for (std::size_t n = 0; n < kInteriorSearchBudget; ++n) {
    for (std::size_t j = 0; j < m; ++j) x[j] = box[j].lo + rng::halton(n, static_cast<unsigned>(j), seed) * width(box[j]);
    if (strictly_inside(poly, box, x)) return x;
  }
  throw UsageError("check_polyhedron: no interior point found within the model's sampling ranges after " +
                   std::to_string(kInteriorSearchBudget) +
                   " candidates; supply Polyhedron::interior_point explicitly");
}

/// Hit-and-run chain in poly intersected with the sampling box. Directions are
/// scaled by the box widths so coordinates of different magnitude mix alike.
std::vector<Vector> hit_and_run(const Polyhedron& poly, std::vector<Interval> box, Vector start,
                                std::size_t count, std::uint64_t seed) {
  const std::size_t m = start.size();
  // Widen the sampling box to contain a user-supplied start point.
  for (std::size_t j = 0; j < m; ++j) {
    box[j].lo = std::min(box[j].lo, start[j]);
    box[j].hi = std::max(box[j].hi, start[j]);
  }
  std::vector<Vector> out;
  out.reserve(count);
  Vector p = std::move(start);
  Vector d(m);
  std::uint32_t step = 0;
  while (out.size() < count) {
    for (std::size_t thin = 0; thin < kHitAndRunThinning; ++thin, ++step) {
      for (std::size_t j = 0; j < m; ++j)
        d[j] = rng::normal(seed, step, static_cast<std::uint32_t>(j), 0, kTagDirection) * width(box[j]);
      const ChordLimits lim = chord(poly, box, p, d);
      if (!(lim.hi > lim.lo) || !std::isfinite(lim.lo) || !std::isfinite(lim.hi)) continue;
      const double u = rng::uniform(seed, step, 0, 0, kTagStep);
      const double lambda = lim.lo + u * (lim.hi - lim.lo);
      for (std::size_t j = 0; j < m; ++j) p[j] += lambda * d[j];
    }
    out.push_back(p);
  }
  return out;
}

/// Index of the single non-zero normal component, if the normal is axis-aligned.
std::optional<std::size_t> axis_of(const Vector& normal) {
  std::optional<std::size_t> axis;
  for (std::size_t j = 0; j < normal.size(); ++j) {
    if (normal[j] != 0.0) {
      if (axis) return std::nullopt;
      axis = j;
    }
  }
  return axis;
}

}  // namespace

CheckReport check_polyhedron(const SdeSystem& sys, const Polyhedron& poly, const CheckConfig& cfg) {
  cfg.validate();
  poly.validate(sys.m());
  CheckReport report = make_report("polyhedron", sys, cfg);
  if (poly.halfspaces.empty()) return report;  // all of R^m

  const std::size_t m = sys.m();
  const std::size_t r = sys.r();
  const auto& box = sys.sampling_ranges();
  const auto times = check_times(cfg);

  const Vector start = find_interior_point(poly, box, cfg.sampler_seed);
  const auto interior = hit_and_run(poly, box, start, cfg.n_face_samples, cfg.sampler_seed);

  double scale = 1.0;
  for (const auto& iv : box) scale = std::max({scale, std::fabs(iv.lo), std::fabs(iv.hi)});
  const double on_face_tol = 1e-12 * scale;

  bool violated = false;
  FieldProbe probe(sys);
  Vector d(m);

  for (std::size_t nu = 0; nu < poly.halfspaces.size(); ++nu) {
    const HalfSpace& h = poly.halfspaces[nu];
    const double norm = std::sqrt(dot(h.normal, h.normal));
    Vector unit(m);
    for (std::size_t j = 0; j < m; ++j) unit[j] = h.normal[j] / norm;
    const auto axis = axis_of(h.normal);

    auto inside_others = [&](std::span<const double> q) {
      for (std::size_t mu = 0; mu < poly.halfspaces.size(); ++mu)
        if (mu != nu && slack(poly.halfspaces[mu], q) < -on_face_tol) return false;
      return true;
    };

    // Face points: orthogonal projection of interior samples, falling back
    // to random rays aimed at the hyperplane.
    std::vector<Vector> points;
    points.reserve(interior.size());
    for (std::size_t s = 0; s < interior.size(); ++s) {
      const Vector& p = interior[s];
      const double sp = slack(h, p);
      Vector q(m);
      for (std::size_t j = 0; j < m; ++j) q[j] = p[j] - sp * h.normal[j] / (norm * norm);
      if (axis) q[*axis] = h.point[*axis];
      bool accepted = inside_others(q);
      for (std::size_t attempt = 0; !accepted && attempt < kRayAttempts; ++attempt) {
        for (std::size_t j = 0; j < m; ++j)
          d[j] = rng::normal(cfg.sampler_seed, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(j),
                             static_cast<std::uint32_t>(nu), static_cast<std::uint32_t>(attempt + 1));
        double rate = dot(d, h.normal);
        if (rate == 0.0) continue;
        if (rate > 0.0) {
          for (double& c : d) c = -c;
          rate = -rate;
        }
        const double lambda = sp / -rate;
        for (std::size_t j = 0; j < m; ++j) q[j] = p[j] + lambda * d[j];
        accepted = inside_others(q);
      }
      if (accepted) points.push_back(std::move(q));
    }

    FaceReport face;
    face.index = nu;
    face.side = "hyperplane";
    face.coordinate = nu;
    face.bound = 0.0;
    face.n_samples = points.size();
    const std::string context = face_context(sys, face);
    FaceAccumulator acc(face, cfg, violated);

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      for (std::size_t s = 0; s < points.size(); ++s) {
        probe.evaluate(t, points[s], context);
        const double fn = dot(probe.f(), unit);
        acc.drift(fn, fn, t, ti, s, points[s]);
        for (std::size_t c = 0; c < r; ++c) {
          double gn = 0.0;
          for (std::size_t j = 0; j < m; ++j) gn += probe.g(j, c) * unit[j];
          acc.diffusion(c, gn, t, ti, s, points[s]);
        }
      }
    }
    report.faces.push_back(std::move(face));
  }
  report.verdict = violated ? Verdict::Violated : Verdict::Satisfied;
  return report;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

CheckReport check_comparison(const SdeSystem& sys_a, const SdeSystem& sys_b,
                             const std::vector<std::size_t>& indices, const CheckConfig& cfg) {
  cfg.validate();
  if (sys_a.m() != sys_b.m() || sys_a.r() != sys_b.r())
    throw UsageError("check_comparison: systems differ in dimensions (" + std::to_string(sys_a.m()) + "x" +
                     std::to_string(sys_a.r()) + " vs " + std::to_string(sys_b.m()) + "x" +
                     std::to_string(sys_b.r()) + ")");
  if (indices.empty()) throw UsageError("check_comparison: index set is empty");
  const std::size_t m = sys_a.m();
  const std::size_t r = sys_a.r();
  std::vector<bool> in_set(m, false);
  for (std::size_t i : indices) {
    if (i >= m) throw UsageError("check_comparison: index " + std::to_string(i) + " out of range");
    if (in_set[i]) throw UsageError("check_comparison: duplicate index " + std::to_string(i));
    in_set[i] = true;
  }

  const auto& ranges = sys_a.sampling_ranges();
  const auto times = check_times(cfg);
  CheckReport report = make_report("comparison", sys_a, cfg);
  report.system = sys_a.name() + " >= " + sys_b.name();
  bool violated = false;
  FieldProbe probe_a(sys_a);
  FieldProbe probe_b(sys_b);

  // The same (x, y) pairs serve every i: y free, x_k = y_k + offset on the
  // index set, x_i pinned to y_i, off-set coordinates of x independent.
  std::vector<Vector> ys(cfg.n_face_samples, Vector(m));
  std::vector<Vector> xs(cfg.n_face_samples, Vector(m));
  for (std::size_t s = 0; s < cfg.n_face_samples; ++s) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = width(ranges[j]);
      ys[s][j] = ranges[j].lo + rng::halton(s, static_cast<unsigned>(j), cfg.sampler_seed) * w;
      const double u = rng::halton(s, static_cast<unsigned>(m + j), cfg.sampler_seed);
      xs[s][j] = in_set[j] ? ys[s][j] + u * w : ranges[j].lo + u * w;
    }
  }

  Vector x(m);
  for (std::size_t i : indices) {
    FaceReport face;
    face.index = report.faces.size();
    face.side = "pair";
    face.coordinate = i;
    face.n_samples = cfg.n_face_samples;
    const std::string context = face_context(sys_a, face);
    FaceAccumulator acc(face, cfg, violated);

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      for (std::size_t s = 0; s < cfg.n_face_samples; ++s) {
        x = xs[s];
        x[i] = ys[s][i];
        probe_a.evaluate(t, x, context);
        probe_b.evaluate(t, ys[s], context + " (second system)");
        const double diff = probe_a.f(i) - probe_b.f(i);
        acc.drift(diff, diff, t, ti, s, x, ys[s]);
        for (std::size_t c = 0; c < r; ++c) acc.diffusion(c, probe_a.g(i, c) - probe_b.g(i, c), t, ti, s, x, ys[s]);
      }
    }
    report.faces.push_back(std::move(face));
  }
  report.verdict = violated ? Verdict::Violated : Verdict::Satisfied;
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const CheckConfig& cfg) {
  return {{"n_face_samples", cfg.n_face_samples},
          {"n_time_samples", cfg.n_time_samples},
          {"t_max_check", cfg.t_max_check},
          {"eps_drift", cfg.eps_drift},
          {"eps_diff", cfg.eps_diff},
          {"sampler_seed", cfg.sampler_seed},
          {"max_witnesses_per_face", cfg.max_witnesses_per_face}};
}

nlohmann::json to_json(const CheckReport& report) {
  nlohmann::json faces = nlohmann::json::array();
  for (const auto& face : report.faces) {
    nlohmann::json witnesses = nlohmann::json::array();
    for (const auto& w : face.witnesses) {
      nlohmann::json jw = {{"t", w.t},
                           {"time_index", w.time_index},
                           {"sample_index", w.sample_index},
                           {"x", w.x},
                           {"kind", to_string(w.kind)},
                           {"value", w.value}};
      if (w.kind == QuantityKind::DiffusionNonzero) jw["column"] = w.column;
      if (!w.y.empty()) jw["y"] = w.y;
      witnesses.push_back(std::move(jw));
    }
    nlohmann::json jf = {{"index", face.index},
                         {"side", face.side},
                         {"coordinate", face.coordinate},
                         {"n_samples", face.n_samples},
                         {"min_drift_margin", finite_or_null(face.min_drift_margin)},
                         {"max_diffusion_abs", face.max_diffusion_abs},
                         {"n_violations", face.n_violations},
                         {"witnesses", std::move(witnesses)}};
    if (face.side == "lower" || face.side == "upper") jf["bound"] = face.bound;
    faces.push_back(std::move(jf));
  }
  return {{"check", report.check},
          {"system", report.system},
          {"interpretation", to_string(report.interpretation)},
          {"verdict", to_string(report.verdict)},
          {"faces", std::move(faces)},
          {"config_echo", to_json(report.config)}};
}

}  // namespace sdeinv
