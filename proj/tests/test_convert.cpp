#include <doctest.h>

#include <cmath>
#include <random>

#include "sdeinv/convert.hpp"
#include "sdeinv/invariance.hpp"
#include "sdeinv/models.hpp"
#include "test_support.hpp"

using namespace sdeinv;

namespace {

const JacobianPolicy kAnalytic{JacobianPolicy::Mode::Analytic};

/// g_ik = sigma * x_i * delta_ik on R^m, Stratonovich.
SdeSystem diagonal_linear(std::size_t m, double sigma) {
  SdeSystem::Definition def;
  def.name = "diag";
  def.m = m;
  def.r = m;
  def.interpretation = Interpretation::Stratonovich;
  def.drift = [](double, std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  };
  def.diffusion = [m, sigma](double, std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) out[i * m + i] = sigma * x[i];
  };
  return SdeSystem(def);
}

/// Two noise columns coupling both coordinates nonlinearly.
SdeSystem coupled() {
  SdeSystem::Definition def;
  def.name = "coupled";
  def.m = 2;
  def.r = 2;
  def.interpretation = Interpretation::Stratonovich;
  def.drift = [](double t, std::span<const double> x, std::span<double> out) {
    out[0] = std::sin(x[1]) + t;
    out[1] = -x[0] * x[1];
  };
  def.diffusion = [](double, std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[1];
    out[1] = std::cos(x[0]);
    out[2] = 0.5;
    out[3] = x[1] * x[1];
  };
  return SdeSystem(def);
}

/// Oracle for `coupled`: h_i = sum_k sum_j dg_ik/dx_j g_jk written out by hand.
Vector coupled_correction(double x0, double x1) {
  const double g00 = x0 * x1, g01 = std::cos(x0), g10 = 0.5, g11 = x1 * x1;
  // k = 0: dg_00/dx_0 = x1, dg_00/dx_1 = x0; dg_10 = 0.
  // k = 1: dg_01/dx_0 = -sin(x0); dg_11/dx_1 = 2 x1.
  const double h0 = x1 * g00 + x0 * g10 + -std::sin(x0) * g01;
  const double h1 = 2.0 * x1 * g11;
  return {h0, h1};
}

}  // namespace

TEST_CASE("constant diffusion has zero correction") {
  const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::additive(0.3), Interpretation::Stratonovich);
  for (const auto& policy : {JacobianPolicy{}, kAnalytic}) {
    const Vector h = correction(sys, 0.0, Vector{0.2, 0.4, 0.6, -50.0}, policy);
    for (double v : h) CHECK(v == 0.0);
  }
}

TEST_CASE("linear diagonal diffusion gives h = sigma^2 x") {
  const SdeSystem sys = diagonal_linear(3, 0.7);
  const Vector x{1.5, -2.0, 0.25};
  const Vector h = correction(sys, 0.0, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == doctest::Approx(0.49 * x[i]).epsilon(1e-9));
}

TEST_CASE("logistic HH correction matches the closed form") {
  const hh::NoiseSpec noise = hh::NoiseSpec::multiplicative(0.5);
  const SdeSystem sys = hh::make_system({}, noise, Interpretation::Stratonovich);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0), volt(-100.0, 60.0);
  for (int s = 0; s < 300; ++s) {
    const Vector x{unit(gen), unit(gen), unit(gen), volt(gen)};
    const Vector exact = hh::expected_correction(noise, x);
    const Vector fd = correction(sys, 0.0, x);
    const Vector an = correction(sys, 0.0, x, kAnalytic);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(an[i] == doctest::Approx(exact[i]).epsilon(1e-14));
      CHECK(std::fabs(fd[i] - exact[i]) <= 1e-6 * std::max(1.0, std::fabs(exact[i])));
    }
    CHECK(exact[3] == 0.0);
  }
}

TEST_CASE("correction vanishes on gating faces with logistic noise") {
  const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::multiplicative(0.5), Interpretation::Stratonovich);
  for (double face : {0.0, 1.0})
    for (std::size_t i = 0; i < 3; ++i) {
      Vector x{0.3, 0.6, 0.8, -40.0};
      x[i] = face;
      CHECK(correction(sys, 0.0, x)[i] == 0.0);
      CHECK(correction(sys, 0.0, x, kAnalytic)[i] == 0.0);
    }
}

TEST_CASE("finite differences reproduce a hand-derived coupled correction") {
  const SdeSystem sys = coupled();
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int s = 0; s < 200; ++s) {
    const double a = u(gen), b = u(gen);
    const Vector h = correction(sys, 0.0, Vector{a, b});
    const Vector exact = coupled_correction(a, b);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::fabs(h[i] - exact[i]) <= 1e-6 * std::max(1.0, std::fabs(exact[i])));
  }
}

TEST_CASE("conversion drifts") {
  const SdeSystem strat = coupled();
  const SdeSystem ito = stratonovich_to_ito(strat);
  CHECK(ito.interpretation() == Interpretation::Ito);
  CHECK(ito.name() == "coupled [ito]");
  const Vector x{0.4, -1.1};
  const Vector f = eval_drift(strat, 2.0, x);
  const Vector fi = eval_drift(ito, 2.0, x);
  const Vector h = coupled_correction(0.4, -1.1);
  for (std::size_t i = 0; i < 2; ++i) CHECK(fi[i] == doctest::Approx(f[i] + 0.5 * h[i]).epsilon(1e-8));
  // Diffusion is carried over unchanged.
  CHECK(eval_diffusion(ito, 2.0, x) == eval_diffusion(strat, 2.0, x));
}

TEST_CASE("property: round trip restores the drift") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0), unit(0.0, 1.0), volt(-100.0, 60.0);
  const SdeSystem a = coupled();
  const SdeSystem back = ito_to_stratonovich(stratonovich_to_ito(a));
  CHECK(back.interpretation() == Interpretation::Stratonovich);
  const SdeSystem hh_sys = hh::make_system({}, hh::NoiseSpec::multiplicative(0.4), Interpretation::Stratonovich);
  const SdeSystem hh_back = ito_to_stratonovich(stratonovich_to_ito(hh_sys));
  for (int s = 0; s < 200; ++s) {
    const Vector x{u(gen), u(gen)};
    const Vector f0 = eval_drift(a, 0.5, x), f1 = eval_drift(back, 0.5, x);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::fabs(f0[i] - f1[i]) <= 1e-8 * std::max(1.0, std::fabs(f0[i])));
    const Vector y{unit(gen), unit(gen), unit(gen), volt(gen)};
    const Vector g0 = eval_drift(hh_sys, 0.0, y), g1 = eval_drift(hh_back, 0.0, y);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(g0[i] - g1[i]) <= 1e-8 * std::max(1.0, std::fabs(g0[i])));
  }
}

TEST_CASE("property: conversion preserves the box verdict when g vanishes on the faces") {
  for (double sigma : {0.05, 0.5, 1.0}) {
    const SdeSystem strat = hh::make_system({}, hh::NoiseSpec::multiplicative(sigma), Interpretation::Stratonovich);
    CheckConfig cfg;
    cfg.n_face_samples = 256;
    cfg.n_time_samples = 2;
    const Box box = hh::metadata().box;
    CHECK(check_box(strat, box, cfg).verdict == check_box(stratonovich_to_ito(strat), box, cfg).verdict);
  }
}

TEST_CASE("conversion errors") {
  const SdeSystem ito = testing::gbm(0.1, 0.2);
  CHECK_THROWS_AS(stratonovich_to_ito(ito), UsageError);
  CHECK_THROWS_AS(ito_to_stratonovich(ito.with_interpretation(Interpretation::Stratonovich)), UsageError);
  CHECK_THROWS_AS(stratonovich_to_ito(coupled(), kAnalytic), UsageError);
  CHECK_THROWS_AS((JacobianPolicy{JacobianPolicy::Mode::CentralDifference, 0.0}.validate()), UsageError);

  const SdeSystem kink = testing::scalar_system([](double) { return 0.0; },
                                                [](double x) { return std::fabs(x) < 1e-3 ? NAN : x; }, {},
                                                Interpretation::Stratonovich);
  try {
    correction(kink, 0.0, Vector{1e-4});
    FAIL("expected ModelEvaluationError");
  } catch (const ModelEvaluationError& e) {
    CHECK(std::string(e.what()).find("d g(0,0)/d x_0") != std::string::npos);
  }
}

TEST_CASE("drift is untouched when there is no diffusion") {
  const SdeSystem det = hh::make_system({}, hh::NoiseSpec::none(), Interpretation::Stratonovich);
  const SdeSystem ito = stratonovich_to_ito(det);
  const Vector x{0.1, 0.2, 0.3, -65.0};
  CHECK(eval_drift(ito, 0.0, x) == eval_drift(det, 0.0, x));
}
