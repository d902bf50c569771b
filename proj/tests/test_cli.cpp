#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sdeinv/cli.hpp"
#include "sdeinv/core.hpp"

using namespace sdeinv;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

bool gates_in_unit_box(const std::vector<std::vector<double>>& rows) {
  for (const auto& r : rows)
    for (std::size_t i = 1; i <= 3; ++i)
      if (r[i] < 0.0 || r[i] > 1.0) return false;
  return true;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sdeinv_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

const fs::path kGolden = fs::path(SDEINV_TEST_DATA_DIR) / "golden";

void check_against_golden(const std::string& csv, const fs::path& golden) {
  REQUIRE(fs::exists(golden));
  std::string h1, h2;
  const auto got = parse_csv(csv, &h1);
  const auto want = parse_csv(slurp(golden), &h2);
  CHECK(h1 == h2);
  REQUIRE(got.size() == want.size());
  for (std::size_t n = 0; n < got.size(); ++n) {
    REQUIRE(got[n].size() == want[n].size());
    for (std::size_t i = 0; i < got[n].size(); ++i)
      CHECK(std::fabs(got[n][i] - want[n][i]) <= 1e-9 * std::max(1.0, std::fabs(want[n][i])));
  }
}

}  // namespace

TEST_CASE("check exit codes") {
  for (const char* sigma : {"0.1", "0.5"}) {
    const Result r = run({"check", "--model", "hh-additive", "--sigma", sigma});
    CHECK(r.code == cli::kExitViolated);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdict"] == "violated");
    REQUIRE(j["faces"].size() == 6);
    for (const auto& face : j["faces"]) CHECK(face["witnesses"][0]["kind"] == "diffusion_nonzero");
  }
  CHECK(run({"check", "--model", "hh-logistic", "--sigma", "0.5"}).code == cli::kExitOk);
  CHECK(run({"check", "--model", "hh-det"}).code == cli::kExitOk);
}

TEST_CASE("usage errors exit 1 with a message") {
  const Result unknown = run({"check", "--model", "hh-bogus"});
  CHECK(unknown.code == cli::kExitError);
  CHECK(unknown.err.find("hh-additive") != std::string::npos);
  CHECK(run({"check"}).code == cli::kExitError);
  CHECK(run({}).code == cli::kExitError);
  CHECK(run({"frobnicate"}).code == cli::kExitError);
  CHECK(run({"check", "--model", "hh-det", "--box", "0:0:1"}).code == cli::kExitError);
  CHECK(run({"simulate", "--model", "hh-det", "--dt", "0.03"}).code == cli::kExitError);
  CHECK(run({"simulate", "--model", "hh-additive", "--scheme", "heun"}).code == cli::kExitError);
  CHECK(run({"simulate", "--model", "hh-additive", "--scheme", "heun", "--force-scheme", "--t-end", "1"}).code ==
        cli::kExitOk);
  CHECK(run({"check", "--model", "hh-det", "--config", "/nonexistent/config.json"}).code == cli::kExitError);
}

TEST_CASE("unwritable output path is an I/O error") {
  const Result r = run({"simulate", "--model", "hh-det", "--t-end", "1", "--out", "/nonexistent/dir/x.csv"});
  CHECK(r.code == cli::kExitError);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("box override narrows the check") {
  // Only the x_3 faces: still violated for additive noise, with two faces.
  const Result r = run({"check", "--model", "hh-additive", "--box", "3:0:1", "--samples", "64"});
  CHECK(r.code == cli::kExitViolated);
  CHECK(nlohmann::json::parse(r.out)["faces"].size() == 2);
  // One-sided boxes on V: the drift points up at -80 mV, but sodium current
  // can push V above 0 mV.
  CHECK(run({"check", "--model", "hh-det", "--box", "4:-80:inf", "--samples", "64"}).code == cli::kExitOk);
  CHECK(run({"check", "--model", "hh-det", "--box", "4:-inf:0", "--samples", "64"}).code == cli::kExitViolated);
}

TEST_CASE("deterministic simulation writes 10001 rows plus header") {
  const Result r = run({"simulate", "--model", "hh-det", "--t-end", "100", "--dt", "0.01"});
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  CHECK(header == "t,x_1,x_2,x_3,V");
  CHECK(rows.size() == 10001);
  CHECK(rows.back()[0] == 100.0);
  CHECK(gates_in_unit_box(rows));
}

TEST_CASE("seed 7: additive leaves the unit box, logistic stays inside") {
  const Result add = run({"simulate", "--model", "hh-additive", "--sigma", "0.5", "--seed", "7"});
  const Result log = run({"simulate", "--model", "hh-logistic", "--sigma", "0.5", "--seed", "7"});
  REQUIRE(log.code == 0);
  CHECK(parse_csv(log.out).size() == 10001);
  CHECK(gates_in_unit_box(parse_csv(log.out)));
  // Once the gates leave [0, 1] the voltage equation turns stiff and explicit
  // Euler at dt = 0.01 blows up; the CSV stops at the last finite state.
  CHECK(add.code == cli::kExitError);
  CHECK(add.err.find("non-finite state") != std::string::npos);
  const auto rows = parse_csv(add.out);
  CHECK(rows.size() > 1);
  CHECK(rows.size() < 10001);
  CHECK_FALSE(gates_in_unit_box(rows));
  // A finer step completes.
  const Result fine = run({"simulate", "--model", "hh-additive", "--sigma", "0.5", "--seed", "7", "--dt", "0.001"});
  CHECK(fine.code == 0);
  CHECK_FALSE(gates_in_unit_box(parse_csv(fine.out)));
}

TEST_CASE("seed-pinned trajectories match the frozen golden files") {
  check_against_golden(run({"simulate", "--model", "hh-additive", "--sigma", "0.5", "--seed", "7", "--t-end", "2"}).out,
                       kGolden / "hh-additive_sigma0.5_seed7_T2.csv");
  check_against_golden(run({"simulate", "--model", "hh-logistic", "--sigma", "0.5", "--seed", "7", "--t-end", "2"}).out,
                       kGolden / "hh-logistic_sigma0.5_seed7_T2.csv");
}

TEST_CASE("outputs are bitwise reproducible, SVG included") {
  const fs::path a = scratch("run_a.csv"), b = scratch("run_b.csv");
  for (const fs::path& p : {a, b}) {
    const Result r = run({"simulate", "--model", "hh-logistic", "--seed", "11", "--t-end", "20", "--plot", "--out",
                          p.string()});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(a) == slurp(b));
  const std::string svg_a = slurp(scratch("run_a_gating.svg"));
  CHECK(svg_a.rfind("<svg", 0) == 0);
  CHECK(svg_a.find("Gating Variables") != std::string::npos);
  CHECK(svg_a == slurp(scratch("run_b_gating.svg")));
  CHECK(slurp(scratch("run_a_voltage.svg")) == slurp(scratch("run_b_voltage.svg")));

  CHECK(run({"simulate", "--model", "hh-det", "--plot"}).code == cli::kExitError);
}

TEST_CASE("SDE_SEED is the fallback seed") {
  const std::vector<std::string> base{"simulate", "--model", "hh-additive", "--t-end", "1"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args).out;
  };
  ::setenv("SDE_SEED", "7", 1);
  const std::string env7 = with({});
  ::setenv("SDE_SEED", "8", 1);
  const std::string env8 = with({});
  const std::string flag7 = with({"--seed", "7"});
  ::unsetenv("SDE_SEED");
  CHECK(env7 == flag7);
  CHECK(env7 != env8);
  CHECK(cli::resolve_seed(std::nullopt) == cli::kDefaultSeed);
  CHECK(cli::resolve_seed(3) == 3);
  ::setenv("SDE_SEED", "abc", 1);
  CHECK_THROWS_AS(cli::resolve_seed(std::nullopt), UsageError);
  ::unsetenv("SDE_SEED");
}

TEST_CASE("config file values fill in and flags win") {
  const fs::path cfg = scratch("config.json");
  std::ofstream(cfg) << R"({"model": "hh-additive", "sigma": 0.1, "seed": 7, "t_end": 1.0,
                           "check": {"n_face_samples": 32}})";
  const Result from_file = run({"simulate", "--config", cfg.string()});
  const Result flags = run({"simulate", "--model", "hh-additive", "--sigma", "0.1", "--seed", "7", "--t-end", "1"});
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out == flags.out);
  const Result override = run({"simulate", "--config", cfg.string(), "--seed", "8"});
  CHECK(override.out != from_file.out);

  const Result check = run({"check", "--config", cfg.string()});
  CHECK(check.code == cli::kExitViolated);
  CHECK(nlohmann::json::parse(check.out)["faces"][0]["n_samples"] == 32);

  const fs::path model = scratch("model.json");
  std::ofstream(model) << R"({"model": "hh-logistic", "sigma": [0.2, 0.3, 0.4], "params": {"I": 0.0}})";
  CHECK(run({"check", "--model", model.string(), "--samples", "64"}).code == cli::kExitOk);
}

TEST_CASE("ensemble command") {
  SUBCASE("one noise-free path") {
    const Result r = run({"ensemble", "--model", "hh-det", "--n-paths", "1", "--t-end", "5"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["violation_fraction"] == 0.0);
  }
  SUBCASE("fractions are monotone in sigma") {
    auto frac = [](const char* sigma) {
      const Result r = run({"ensemble", "--model", "hh-additive", "--sigma", sigma, "--n-paths", "100", "--seed",
                            "7", "--summary-stride", "500", "--workers", "1"});
      return nlohmann::json::parse(r.out)["violation_fraction"].get<double>();
    };
    CHECK(frac("0.1") <= frac("0.5"));
  }
  SUBCASE("both interpretations of the logistic model") {
    const Result r = run({"ensemble", "--model", "hh-logistic", "--n-paths", "50", "--both-interpretations",
                          "--summary-stride", "1000", "--workers", "2"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["ito"]["scheme"] == "euler-maruyama");
    CHECK(j["stratonovich"]["scheme"] == "euler-heun");
    CHECK(j["ito"]["violation_fraction"].get<double>() < 0.05);
    CHECK(j["stratonovich"]["violation_fraction"].get<double>() < 0.05);
  }
  SUBCASE("dump warns about output size") {
    const fs::path dir = scratch("dump");
    fs::remove_all(dir);
    const Result r = run({"ensemble", "--model", "hh-additive", "--n-paths", "2", "--t-end", "0.1", "--dump-paths",
                          dir.string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(fs::exists(dir / "ito" / "path_1.csv"));
  }
}

TEST_CASE("convert command") {
  SUBCASE("additive: zero correction") {
    const Result r = run({"convert", "--model", "hh-additive", "--samples", "256"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["correction_identically_zero"] == true);
    CHECK(j["verdict_equality"] == "equal");
  }
  SUBCASE("logistic: closed form within 1e-6") {
    const Result r = run({"convert", "--model", "hh-logistic", "--samples", "256"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["max_abs_error_fd"].get<double>() <= 1e-6);
    CHECK(j["max_abs_error_analytic"].get<double>() <= 1e-12);
    CHECK(j["max_abs_correction"].get<double>() > 0.0);
    CHECK(j["verdict_equality"] == "equal");
  }
  SUBCASE("deterministic model") {
    const auto j = nlohmann::json::parse(run({"convert", "--model", "hh-det", "--samples", "64"}).out);
    CHECK(j["verdict_equality"] == "equal");
  }
}

TEST_CASE("help exits 0") {
  const Result r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("simulate") != std::string::npos);
}
