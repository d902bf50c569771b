#include "sdeinv/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "sdeinv/convert.hpp"
#include "sdeinv/integrate.hpp"
#include "sdeinv/invariance.hpp"
#include "sdeinv/models.hpp"
#include "sdeinv/montecarlo.hpp"
#include "sdeinv/svg.hpp"

namespace sdeinv::cli {

namespace {

using nlohmann::json;

constexpr double kDefaultDt = 0.01;
constexpr double kDefaultEnsembleHorizon = 50.0;
constexpr std::size_t kDefaultPaths = 1000;
constexpr double kDefaultSigma = 0.5;

template <typename T>
void fill_from(std::optional<T>& field, const json& j, const char* key) {
  if (!field && j.contains(key)) field = j.at(key).get<T>();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

double parse_bound(const std::string& text) {
  if (text == "inf" || text == "+inf") return kInf;
  if (text == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw UsageError("invalid box bound '" + text + "'");
  return v;
}

/// "i:lo:hi" with a 1-based coordinate index.
void add_box_entry(Box& box, const std::string& entry) {
  std::vector<std::string> parts;
  std::stringstream ss(entry);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3) throw UsageError("box entry '" + entry + "' must look like i:lower:upper");
  std::size_t idx = 0;
  try {
    idx = std::stoul(parts[0]);
  } catch (const std::exception&) {
    throw UsageError("box entry '" + entry + "': bad coordinate index");
  }
  if (idx == 0) throw UsageError("box entry '" + entry + "': coordinate indices start at 1");
  box.indices.push_back(idx - 1);
  box.lower.push_back(parse_bound(parts[1]));
  box.upper.push_back(parse_bound(parts[2]));
}

ModelSpec resolve_model(const RunSpec& spec) {
  json file_json;
  std::optional<std::string> name;
  if (spec.model) {
    if (std::filesystem::is_regular_file(*spec.model)) {
      file_json = read_json_file(*spec.model);
      if (!file_json.is_object() || !file_json.contains("model"))
        throw UsageError("model file '" + *spec.model + "' must be a JSON object with a \"model\" entry");
    } else {
      name = *spec.model;
    }
  }
  if (!name && file_json.is_object()) name = file_json.at("model").get<std::string>();
  if (!name && spec.model_json.is_object() && spec.model_json.contains("model"))
    name = spec.model_json.at("model").get<std::string>();
  if (!name) {
    std::string known;
    for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("no model given (use --model; available: " + known + ")");
  }
  ModelSpec ms = model_spec(*name, kDefaultSigma, Interpretation::Ito);
  if (spec.model_json.is_object()) {
    json overlay = spec.model_json;
    overlay.erase("model");
    ms = apply_model_json(ms, overlay);
  }
  if (file_json.is_object()) {
    json overlay = file_json;
    overlay.erase("model");
    ms = apply_model_json(ms, overlay);
  }
  if (spec.sigma && ms.noise.kind != hh::NoiseSpec::Kind::None) ms.noise.sigma.fill(*spec.sigma);
  if (spec.interpretation) ms.interpretation = parse_interpretation(*spec.interpretation);
  ms.noise.validate();
  return ms;
}

Box resolve_box(const RunSpec& spec) {
  if (spec.box.empty()) return hh::metadata().box;
  Box box;
  for (const auto& entry : spec.box) add_box_entry(box, entry);
  return box;
}

TimeGrid resolve_grid(const RunSpec& spec, double default_horizon) {
  const double t0 = spec.t0.value_or(0.0);
  const double t_end = spec.t_end.value_or(t0 + default_horizon);
  if (!(t_end > t0)) throw UsageError("t_end must exceed t0");
  if (spec.n_steps) return TimeGrid(t0, t_end, *spec.n_steps);
  const double dt = spec.dt.value_or(kDefaultDt);
  if (!(dt > 0.0)) throw UsageError("dt must be positive");
  const double ratio = (t_end - t0) / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::fabs(steps - ratio) > 1e-9 * std::max(1.0, ratio))
    throw UsageError("dt does not divide [t0, t_end] into a whole number of steps; pass --n-steps instead");
  return TimeGrid(t0, t_end, static_cast<std::size_t>(steps));
}

SimConfig resolve_sim(const RunSpec& spec, double default_horizon) {
  SimConfig cfg;
  cfg.grid = resolve_grid(spec, default_horizon);
  cfg.x0 = hh::metadata().x0;
  cfg.scheme = parse_scheme(spec.scheme.value_or("auto"));
  cfg.force_scheme = spec.force_scheme.value_or(false);
  cfg.seed = resolve_seed(spec.seed);
  return cfg;
}

CheckConfig resolve_check(const RunSpec& spec) {
  CheckConfig cfg;
  if (spec.n_face_samples) cfg.n_face_samples = *spec.n_face_samples;
  if (spec.n_time_samples) cfg.n_time_samples = *spec.n_time_samples;
  if (spec.t_max_check) cfg.t_max_check = *spec.t_max_check;
  if (spec.eps_drift) cfg.eps_drift = *spec.eps_drift;
  if (spec.eps_diff) cfg.eps_diff = *spec.eps_diff;
  if (spec.sampler_seed) cfg.sampler_seed = *spec.sampler_seed;
  cfg.validate();
  return cfg;
}

std::size_t resolve_workers(const RunSpec& spec) {
  if (spec.workers) return std::max<std::size_t>(1, *spec.workers);
  return std::max(1u, std::thread::hardware_concurrency());
}

void emit_json(const json& doc, const RunSpec& spec, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (spec.out) {
    std::ofstream file(*spec.out, std::ios::binary);
    if (!file) throw Error("cannot open '" + *spec.out + "' for writing");
    file << text;
    if (!file) throw Error("failed writing '" + *spec.out + "'");
  } else {
    out << text;
  }
}

// ---------------------------------------------------------------------------

int cmd_check(const RunSpec& spec, std::ostream& out) {
  const ModelSpec ms = resolve_model(spec);
  const SdeSystem sys = build_model(ms);
  const CheckReport report = check_box(sys, resolve_box(spec), resolve_check(spec));
  emit_json(to_json(report), spec, out);
  return report.satisfied() ? kExitOk : kExitViolated;
}

int cmd_simulate(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const ModelSpec ms = resolve_model(spec);
  const SdeSystem sys = build_model(ms);
  const SimConfig cfg = resolve_sim(spec, hh::metadata().horizon);
  PartialRun run = ms.noise.kind == hh::NoiseSpec::Kind::None
                       ? PartialRun{simulate_deterministic(sys, cfg), true, 0}
                       : simulate_partial(sys, cfg, WienerGrid(cfg.seed, spec.path_id.value_or(0), cfg.grid, sys.r()));
  const Trajectory& traj = run.trajectory;

  if (spec.out) {
    write_trajectory_csv(*spec.out, traj, sys.coordinate_names());
  } else {
    write_trajectory_csv(out, traj, sys.coordinate_names());
  }

  if (spec.plot.value_or(false)) {
    if (!spec.out) throw UsageError("--plot needs --out to name the SVG files");
    const std::filesystem::path base(*spec.out);
    const std::string stem = (base.parent_path() / base.stem()).string();
    const std::string tag = ms.noise.kind == hh::NoiseSpec::Kind::None
                                ? "deterministic"
                                : ms.name + ", sigma=" + format_double(ms.noise.sigma[0]) + ", " +
                                      to_string(ms.interpretation);
    Vector times(traj.states.rows());
    for (std::size_t n = 0; n < times.size(); ++n) times[n] = traj.grid.time(n);
    svg::Chart gating{"Gating Variables (" + tag + ")", "t [ms]", "x_i", times, {}};
    svg::Chart voltage{"Voltage (" + tag + ")", "t [ms]", "V [mV]", times, {}};
    for (std::size_t i = 0; i < sys.m(); ++i) {
      svg::Series series{sys.coordinate_names()[i], Vector(times.size())};
      for (std::size_t n = 0; n < times.size(); ++n) series.values[n] = traj.state(n)[i];
      (i == hh::kVoltage ? voltage : gating).series.push_back(std::move(series));
    }
    svg::write(stem + "_gating.svg", gating);
    svg::write(stem + "_voltage.svg", voltage);
    err << "wrote " << stem << "_gating.svg and " << stem << "_voltage.svg\n";
  }
  if (!run.completed) {
    err << "error: non-finite state at step " << run.failed_step << " (t = " << format_double(cfg.grid.time(run.failed_step))
        << "); output stops at the last finite state\n";
    return kExitError;
  }
  return kExitOk;
}

int cmd_ensemble(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const ModelSpec ms = resolve_model(spec);
  const SimConfig cfg = resolve_sim(spec, kDefaultEnsembleHorizon);
  const Box box = resolve_box(spec);
  EnsembleOptions opts;
  opts.workers = resolve_workers(spec);
  opts.tol = spec.tol.value_or(0.0);
  opts.summary_stride = spec.summary_stride.value_or(1);
  opts.dump_dir = spec.dump_dir;
  if (opts.dump_dir)
    err << "warning: writing one CSV per path to '" << *opts.dump_dir << "'; this can be large\n";
  const std::size_t n_paths = spec.n_paths.value_or(kDefaultPaths);

  auto run_one = [&](Interpretation interp) {
    ModelSpec variant = ms;
    variant.interpretation = interp;
    EnsembleOptions local = opts;
    if (local.dump_dir) local.dump_dir = *local.dump_dir + "/" + to_string(interp);
    return to_json(run_ensemble(build_model(variant), cfg, n_paths, box, local));
  };

  json doc;
  if (spec.both_interpretations.value_or(false)) {
    doc = {{"ito", run_one(Interpretation::Ito)}, {"stratonovich", run_one(Interpretation::Stratonovich)}};
  } else {
    doc = run_one(ms.interpretation);
  }
  emit_json(doc, spec, out);
  return kExitOk;
}

int cmd_convert(const RunSpec& spec, std::ostream& out) {
  const ModelSpec ms = resolve_model(spec);
  ModelSpec strat_spec = ms;
  strat_spec.interpretation = Interpretation::Stratonovich;
  const SdeSystem strat = build_model(strat_spec);
  const JacobianPolicy fd{JacobianPolicy::Mode::CentralDifference, 1e-6};
  const JacobianPolicy analytic{JacobianPolicy::Mode::Analytic, 1e-6};

  json samples = json::array();
  double max_fd_err = 0.0;
  double max_analytic_err = 0.0;
  double max_abs = 0.0;
  const double gating_grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double voltages[] = {-80.0, -60.0, -20.0};
  for (double v : voltages)
    for (double a : gating_grid)
      for (double b : gating_grid)
        for (double c : gating_grid) {
          const Vector x{a, b, c, v};
          const Vector h_fd = correction(strat, 0.0, x, fd);
          const Vector h_an = correction(strat, 0.0, x, analytic);
          const Vector h_ex = hh::expected_correction(ms.noise, x);
          for (std::size_t i = 0; i < x.size(); ++i) {
            max_fd_err = std::max(max_fd_err, std::fabs(h_fd[i] - h_ex[i]));
            max_analytic_err = std::max(max_analytic_err, std::fabs(h_an[i] - h_ex[i]));
            max_abs = std::max(max_abs, std::fabs(h_an[i]));
          }
          if (a == b && b == c) samples.push_back({{"x", x}, {"correction_fd", h_fd}, {"correction_analytic", h_an}});
        }

  const CheckConfig ccfg = resolve_check(spec);
  const Box box = resolve_box(spec);
  const CheckReport original = check_box(strat, box, ccfg);
  const CheckReport converted = check_box(stratonovich_to_ito(strat, fd), box, ccfg);
  const bool equal = original.verdict == converted.verdict;

  json doc = {{"model", ms.name},
              {"sigma", ms.noise.kind == hh::NoiseSpec::Kind::None ? json(nullptr) : json(ms.noise.sigma)},
              {"correction_formula", ms.noise.kind == hh::NoiseSpec::Kind::Multiplicative
                                         ? "sigma^2 x_i (1 - x_i) (1 - 2 x_i)"
                                         : "0"},
              {"samples", std::move(samples)},
              {"n_grid_points", 375},
              {"max_abs_correction", max_abs},
              {"max_abs_error_fd", max_fd_err},
              {"max_abs_error_analytic", max_analytic_err},
              {"correction_identically_zero", max_abs == 0.0},
              {"verdict_stratonovich", to_string(original.verdict)},
              {"verdict_converted_ito", to_string(converted.verdict)},
              {"verdict_equality", equal ? "equal" : "different"}};
  emit_json(doc, spec, out);
  return kExitOk;
}

void add_common_options(CLI::App* cmd, RunSpec& spec, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON file with run settings (flags take precedence)");
  cmd->add_option("--model", spec.model, "model name (hh-det, hh-additive, hh-logistic) or model JSON file");
  cmd->add_option("--sigma", spec.sigma, "noise intensity on every gating row");
  cmd->add_option("--interpretation", spec.interpretation, "ito or stratonovich");
  cmd->add_option("--box", spec.box, "box face override i:lower:upper (1-based, repeatable)");
  cmd->add_option("--out", spec.out, "output file (stdout when omitted)");
}

void add_grid_options(CLI::App* cmd, RunSpec& spec) {
  cmd->add_option("--t0", spec.t0, "start time");
  cmd->add_option("--t-end", spec.t_end, "end time");
  cmd->add_option("--dt", spec.dt, "time step");
  cmd->add_option("--n-steps", spec.n_steps, "number of steps (overrides --dt)");
  cmd->add_option("--seed", spec.seed, "Wiener stream seed (falls back to SDE_SEED)");
  cmd->add_option("--scheme", spec.scheme, "auto, em or heun");
  cmd->add_flag("--force-scheme", spec.force_scheme, "allow a scheme that does not match the interpretation");
}

void add_check_options(CLI::App* cmd, RunSpec& spec) {
  cmd->add_option("--samples", spec.n_face_samples, "state samples per face");
  cmd->add_option("--times", spec.n_time_samples, "time samples");
  cmd->add_option("--t-max-check", spec.t_max_check, "time horizon for sampling");
  cmd->add_option("--eps-drift", spec.eps_drift, "drift sign tolerance");
  cmd->add_option("--eps-diff", spec.eps_diff, "diffusion zero tolerance");
  cmd->add_option("--sampler-seed", spec.sampler_seed, "low-discrepancy rotation seed");
}

}  // namespace

void merge_config(RunSpec& spec, const json& config) {
  if (!config.is_object()) throw UsageError("config must be a JSON object");
  try {
    if (config.contains("model")) {
      const auto& m = config.at("model");
      if (m.is_string()) {
        if (!spec.model) spec.model = m.get<std::string>();
      } else if (m.is_object()) {
        spec.model_json = m;
      } else {
        throw UsageError("config: \"model\" must be a name or an object");
      }
    }
    if (config.contains("params")) {
      if (!spec.model_json.is_object()) spec.model_json = json::object();
      spec.model_json["params"] = config.at("params");
    }
    fill_from(spec.sigma, config, "sigma");
    fill_from(spec.interpretation, config, "interpretation");
    fill_from(spec.scheme, config, "scheme");
    fill_from(spec.force_scheme, config, "force_scheme");
    fill_from(spec.t0, config, "t0");
    fill_from(spec.t_end, config, "t_end");
    fill_from(spec.dt, config, "dt");
    fill_from(spec.n_steps, config, "n_steps");
    fill_from(spec.seed, config, "seed");
    fill_from(spec.n_paths, config, "n_paths");
    fill_from(spec.workers, config, "workers");
    fill_from(spec.path_id, config, "path_id");
    fill_from(spec.out, config, "out");
    fill_from(spec.plot, config, "plot");
    fill_from(spec.both_interpretations, config, "both_interpretations");
    fill_from(spec.dump_dir, config, "dump_dir");
    fill_from(spec.summary_stride, config, "summary_stride");
    fill_from(spec.tol, config, "tol");
    if (spec.box.empty() && config.contains("box")) {
      for (const auto& entry : config.at("box")) {
        std::ostringstream os;
        os << entry.at("index").get<std::size_t>() << ':';
        const auto bound = [](const json& b) {
          return b.is_string() ? b.get<std::string>() : format_double(b.get<double>());
        };
        os << bound(entry.at("lower")) << ':' << bound(entry.at("upper"));
        spec.box.push_back(os.str());
      }
    }
    if (config.contains("check")) {
      const auto& c = config.at("check");
      fill_from(spec.n_face_samples, c, "n_face_samples");
      fill_from(spec.n_time_samples, c, "n_time_samples");
      fill_from(spec.t_max_check, c, "t_max_check");
      fill_from(spec.eps_drift, c, "eps_drift");
      fill_from(spec.eps_diff, c, "eps_diff");
      fill_from(spec.sampler_seed, c, "sampler_seed");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& explicit_seed) {
  if (explicit_seed) return *explicit_seed;
  if (const char* env = std::getenv("SDE_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError(std::string("SDE_SEED is not an integer: '") + env + "'");
    return v;
  }
  return kDefaultSeed;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Invariance checks and simulation for stochastic differential equations", "sdeinv"};
  app.require_subcommand(1);
  RunSpec spec;
  std::string config_path;

  auto* check = app.add_subcommand("check", "check box invariance conditions; exit 0 satisfied, 2 violated");
  add_common_options(check, spec, config_path);
  add_check_options(check, spec);

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate one path and write a trajectory CSV");
  add_common_options(simulate_cmd, spec, config_path);
  add_grid_options(simulate_cmd, spec);
  simulate_cmd->add_option("--path-id", spec.path_id, "Wiener path index");
  simulate_cmd->add_flag("--plot", spec.plot, "also write <out>_gating.svg and <out>_voltage.svg");

  auto* ensemble = app.add_subcommand("ensemble", "ensemble violation statistics as JSON");
  add_common_options(ensemble, spec, config_path);
  add_grid_options(ensemble, spec);
  ensemble->add_option("--n-paths", spec.n_paths, "number of paths");
  ensemble->add_option("--workers", spec.workers, "worker threads");
  ensemble->add_option("--tol", spec.tol, "box tolerance for violation counting");
  ensemble->add_option("--summary-stride", spec.summary_stride, "grid stride for summary series");
  ensemble->add_option("--dump-paths", spec.dump_dir, "directory for per-path CSV files");
  ensemble->add_flag("--both-interpretations", spec.both_interpretations, "run Ito and Stratonovich readings");

  auto* convert_cmd = app.add_subcommand("convert", "Stratonovich to Ito drift correction summary");
  add_common_options(convert_cmd, spec, config_path);
  add_check_options(convert_cmd, spec);

  std::vector<const char*> argv{"sdeinv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (!config_path.empty()) merge_config(spec, read_json_file(config_path));
    if (check->parsed()) return cmd_check(spec, out);
    if (simulate_cmd->parsed()) return cmd_simulate(spec, out, err);
    if (ensemble->parsed()) return cmd_ensemble(spec, out, err);
    if (convert_cmd->parsed()) return cmd_convert(spec, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace sdeinv::cli
