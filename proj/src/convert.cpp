#include "sdeinv/convert.hpp"

#include <algorithm>
#include <cmath>

namespace sdeinv {

namespace {

void jacobian_into(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy,
                   std::span<double> out) {
  const std::size_t m = sys.m();
  const std::size_t r = sys.r();
  if (policy.mode == JacobianPolicy::Mode::Analytic) {
    sys.jacobian_into(t, x, out);
  } else {
    Vector xp(x.begin(), x.end());
    Vector gp(m * r);
    Vector gm(m * r);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = policy.fd_step * std::max(1.0, std::fabs(x[j]));
      xp[j] = x[j] + h;
      sys.diffusion_into(t, xp, gp);
      xp[j] = x[j] - h;
      sys.diffusion_into(t, xp, gm);
      xp[j] = x[j];
      // (x + h) - (x - h) is not exactly 2h in floating point.
      const double denom = (x[j] + h) - (x[j] - h);
      for (std::size_t n = 0; n < m * r; ++n) out[j * m * r + n] = (gp[n] - gm[n]) / denom;
    }
  }
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (!std::isfinite(out[n])) {
      const std::size_t j = n / (m * r);
      const std::size_t i = (n / r) % m;
      const std::size_t k = n % r;
      throw ModelEvaluationError("non-finite diffusion Jacobian entry d g(" + std::to_string(i) + "," +
                                     std::to_string(k) + ")/d x_" + std::to_string(j),
                                 t, Vector(x.begin(), x.end()), n);
    }
  }
}

void correction_into(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy,
                     std::span<double> h) {
  const std::size_t m = sys.m();
  const std::size_t r = sys.r();
  std::fill(h.begin(), h.end(), 0.0);
  if (!sys.has_diffusion()) return;
  Vector g(m * r);
  sys.diffusion_into(t, x, g);
  Vector jac(m * m * r);
  jacobian_into(sys, t, x, policy, jac);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t j = 0; j < m; ++j) acc += jac[(j * m + i) * r + k] * g[j * r + k];
    h[i] = acc;
  }
}

SdeSystem shifted(const SdeSystem& sys, const JacobianPolicy& policy, double factor, Interpretation target,
                  const char* suffix) {
  policy.validate();
  if (policy.mode == JacobianPolicy::Mode::Analytic && sys.has_diffusion() && !sys.has_analytic_jacobian())
    throw UsageError("system '" + sys.name() + "' has no analytic diffusion Jacobian");
  SdeSystem::Definition def = sys.definition();
  def.name = sys.name() + suffix;
  def.interpretation = target;
  if (sys.has_diffusion()) {
    def.drift = [base = sys, policy, factor](double t, std::span<const double> x, std::span<double> out) {
      base.drift_into(t, x, out);
      Vector h(base.m());
      correction_into(base, t, x, policy, h);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += factor * h[i];
    };
  }
  return SdeSystem(std::move(def));
}

}  // namespace

void JacobianPolicy::validate() const {
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) throw UsageError("Jacobian policy: fd_step must be > 0");
}

Vector diffusion_jacobian(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy) {
  policy.validate();
  if (x.size() != sys.m()) throw UsageError("diffusion_jacobian: state has wrong length");
  Vector out(sys.m() * sys.m() * sys.r(), 0.0);
  if (sys.has_diffusion()) jacobian_into(sys, t, x, policy, out);
  return out;
}

Vector correction(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy) {
  policy.validate();
  if (x.size() != sys.m()) throw UsageError("correction: state has wrong length");
  Vector h(sys.m(), 0.0);
  correction_into(sys, t, x, policy, h);
  return h;
}

SdeSystem stratonovich_to_ito(const SdeSystem& sys, const JacobianPolicy& policy) {
  if (sys.interpretation() != Interpretation::Stratonovich)
    throw UsageError("stratonovich_to_ito: system '" + sys.name() + "' is not a Stratonovich system");
  return shifted(sys, policy, 0.5, Interpretation::Ito, " [ito]");
}

SdeSystem ito_to_stratonovich(const SdeSystem& sys, const JacobianPolicy& policy) {
  if (sys.interpretation() != Interpretation::Ito)
    throw UsageError("ito_to_stratonovich: system '" + sys.name() + "' is not an Ito system");
  return shifted(sys, policy, -0.5, Interpretation::Stratonovich, " [stratonovich]");
}

}  // namespace sdeinv
