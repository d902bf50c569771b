#pragma once

// Ito <-> Stratonovich conversion through the drift correction
//   h_i(t,x) = sum_k sum_j (d g_ik / d x_j)(t,x) g_jk(t,x).
// A Stratonovich system (f, g) is the Ito system (f + h/2, g).

#include "sdeinv/core.hpp"

namespace sdeinv {

struct JacobianPolicy {
  enum class Mode { Analytic, CentralDifference };
  Mode mode = Mode::CentralDifference;
  /// Central-difference step relative to max(1, |x_j|).
  double fd_step = 1e-6;

  void validate() const;
};

/// d g / d x as m*m*r values, entry (j, i, k) at (j*m + i)*r + k.
Vector diffusion_jacobian(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy);

/// The correction field h at (t, x).
Vector correction(const SdeSystem& sys, double t, std::span<const double> x, const JacobianPolicy& policy = {});

/// Same diffusion, drift f + h/2, tagged Ito. Requires a Stratonovich input.
SdeSystem stratonovich_to_ito(const SdeSystem& sys, const JacobianPolicy& policy = {});

/// Same diffusion, drift f - h/2, tagged Stratonovich. Requires an Ito input.
SdeSystem ito_to_stratonovich(const SdeSystem& sys, const JacobianPolicy& policy = {});

}  // namespace sdeinv
