#include <doctest.h>

#include <cmath>

#include "sdeinv/models.hpp"

using namespace sdeinv;

TEST_CASE("rate functions at reference voltages") {
  CHECK(hh::rate_alpha(3, -60.0) == 0.07);
  CHECK(hh::rate_beta(1, -60.0) == 4.0);
  CHECK(hh::rate_beta(2, -60.0) == 0.125);
  CHECK(hh::rate_beta(3, -30.0) == 0.5);
}

TEST_CASE("removable singularities use the continuous extension") {
  CHECK(std::fabs(hh::rate_alpha(1, -35.0) - 1.0) < 1e-9);
  CHECK(std::fabs(hh::rate_alpha(2, -50.0) - 0.1) < 1e-9);
  // Oracle: the naive quotient on either side of the singular point.
  auto naive1 = [](double V) { return 0.1 * (V + 35.0) / (1.0 - std::exp(-(V + 35.0) / 10.0)); };
  auto naive2 = [](double V) { return 0.01 * (V + 50.0) / (1.0 - std::exp(-(V + 50.0) / 10.0)); };
  CHECK(naive1(-35.0 + 1e-6) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(naive1(-35.0 - 1e-6) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(naive2(-50.0 + 1e-6) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(naive2(-50.0 - 1e-6) == doctest::Approx(0.1).epsilon(1e-6));

  for (double eps : {1e-5, -1e-5}) {
    CHECK(std::fabs(hh::rate_alpha(1, -35.0 + eps) - hh::rate_alpha(1, -35.0)) < 1e-6);
    CHECK(std::fabs(hh::rate_alpha(2, -50.0 + eps) - hh::rate_alpha(2, -50.0)) < 1e-6);
  }
  // Inside and just outside the series band the two branches agree.
  for (double d : {5e-8, 2e-7, 1e-6}) {
    CHECK(hh::rate_alpha(1, -35.0 + d) == doctest::Approx(naive1(-35.0 + d)).epsilon(1e-7));
    CHECK(hh::rate_alpha(2, -50.0 - d) == doctest::Approx(naive2(-50.0 - d)).epsilon(1e-7));
  }
}

TEST_CASE("rates are positive and finite on [-100, 60]") {
  for (int k = 0; k <= 16000; ++k) {
    const double V = -100.0 + 0.01 * k;
    for (int i = 1; i <= 3; ++i) {
      const double a = hh::rate_alpha(i, V);
      const double b = hh::rate_beta(i, V);
      REQUIRE(std::isfinite(a));
      REQUIRE(std::isfinite(b));
      REQUIRE(a > 0.0);
      REQUIRE(b > 0.0);
    }
  }
}

TEST_CASE("gating drift sign structure on the unit faces") {
  const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::none());
  for (int k = 0; k <= 320; ++k) {
    const double V = -100.0 + 0.5 * k;
    for (std::size_t i = 0; i < 3; ++i) {
      Vector lo{0.3, 0.6, 0.2, V}, hi = lo;
      lo[i] = 0.0;
      hi[i] = 1.0;
      CHECK(eval_drift(sys, 0.0, lo)[i] == hh::rate_alpha(static_cast<int>(i) + 1, V));
      CHECK(eval_drift(sys, 0.0, hi)[i] == -hh::rate_beta(static_cast<int>(i) + 1, V));
    }
  }
}

TEST_CASE("gate index is validated") {
  CHECK_THROWS_AS(hh::rate_alpha(0, -60.0), UsageError);
  CHECK_THROWS_AS(hh::rate_beta(4, -60.0), UsageError);
}

TEST_CASE("system shapes per noise kind") {
  const Vector x{0.0, 0.5, 1.0, -60.0};
  SUBCASE("none") {
    const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::none());
    CHECK(sys.m() == 4);
    CHECK(sys.r() == 3);
    const Matrix g = eval_diffusion(sys, 0.0, x);
    for (double v : g.data()) CHECK(v == 0.0);
  }
  SUBCASE("multiplicative") {
    const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::multiplicative(0.5));
    const Matrix g = eval_diffusion(sys, 0.0, x);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(1, 1) == 0.125);
    CHECK(g(2, 2) == 0.0);
  }
  SUBCASE("interpretation is switchable") {
    const SdeSystem sys = hh::make_system({}, hh::NoiseSpec::additive(0.1), Interpretation::Stratonovich);
    CHECK(sys.interpretation() == Interpretation::Stratonovich);
  }
}

TEST_CASE("voltage equation") {
  const hh::Params p;
  const SdeSystem sys = hh::make_system(p, hh::NoiseSpec::none());
  const Vector x{0.2, 0.4, 0.7, -20.0};
  const double expected = (p.I - p.g_Na * std::pow(0.2, 3) * 0.7 * (-20.0 - p.E_Na) -
                           p.g_K * std::pow(0.4, 4) * (-20.0 - p.E_K) - p.g_L * (-20.0 - p.E_L)) /
                          p.C;
  CHECK(eval_drift(sys, 0.0, x)[3] == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("metadata") {
  const hh::Metadata md = hh::metadata();
  CHECK(md.box.lower == Vector{0.0, 0.0, 0.0});
  CHECK(md.box.upper == Vector{1.0, 1.0, 1.0});
  CHECK(md.voltage_range == Interval{-100.0, 60.0});
  CHECK(md.horizon == 100.0);
  REQUIRE(md.x0.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(md.x0[i] > 0.0);
    CHECK(md.x0[i] < 1.0);
  }
  CHECK(md.x0[3] == -60.0);
  // Resting gating values are the steady states at -60 mV.
  CHECK(md.x0[2] == doctest::Approx(0.07 / (0.07 + 1.0 / (1.0 + std::exp(3.0)))));
}

TEST_CASE("parameter and noise validation") {
  hh::Params bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(hh::make_system(bad, hh::NoiseSpec::none()), UsageError);
  bad = {};
  bad.g_K = -1.0;
  CHECK_THROWS_AS(hh::make_system(bad, hh::NoiseSpec::none()), UsageError);
  CHECK_THROWS_AS(hh::make_system({}, hh::NoiseSpec::additive(0.0)), UsageError);
  CHECK_THROWS_AS(hh::make_system({}, hh::NoiseSpec::multiplicative(-0.5)), UsageError);
}

TEST_CASE("registry") {
  CHECK(model_names() == std::vector<std::string>{"hh-det", "hh-additive", "hh-logistic"});
  CHECK(model_spec("hh-det").noise.kind == hh::NoiseSpec::Kind::None);
  CHECK(model_spec("hh-additive", 0.1).noise.sigma[2] == 0.1);
  CHECK(model_spec("hh-logistic").noise.kind == hh::NoiseSpec::Kind::Multiplicative);
  try {
    model_spec("hh-nope");
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("hh-logistic") != std::string::npos);
  }

  const ModelSpec spec = apply_model_json(model_spec("hh-det"), nlohmann::json::parse(R"({
      "model": "hh-additive", "sigma": [0.1, 0.2, 0.3], "interpretation": "stratonovich",
      "params": {"I": 0.2, "g_K": 0.4}})"));
  CHECK(spec.name == "hh-additive");
  CHECK(spec.noise.sigma == std::array<double, 3>{0.1, 0.2, 0.3});
  CHECK(spec.interpretation == Interpretation::Stratonovich);
  CHECK(spec.params.I == 0.2);
  CHECK(spec.params.g_K == 0.4);
  CHECK(spec.params.C == 0.01);
  CHECK_THROWS_AS(apply_model_json(spec, nlohmann::json::parse(R"({"sigma": [1, 2]})")), UsageError);
}
