#pragma once

// Command-line front end: check, simulate, ensemble, convert.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sdeinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolated = 2;

inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// Everything a subcommand needs. Unset fields take command defaults;
/// command-line flags override values from a --config JSON file.
struct RunSpec {
  std::optional<std::string> model;
  nlohmann::json model_json;  // inline model description from a config file
  std::optional<double> sigma;
  std::optional<std::string> interpretation;
  std::optional<std::string> scheme;
  std::optional<bool> force_scheme;
  std::optional<double> t0;
  std::optional<double> t_end;
  std::optional<double> dt;
  std::optional<std::size_t> n_steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_paths;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> path_id;
  std::vector<std::string> box;  // "i:lo:hi", 1-based coordinate index
  std::optional<std::string> out;
  std::optional<bool> plot;
  std::optional<bool> both_interpretations;
  std::optional<std::string> dump_dir;
  std::optional<std::size_t> summary_stride;
  std::optional<double> tol;
  // checker budget
  std::optional<std::size_t> n_face_samples;
  std::optional<std::size_t> n_time_samples;
  std::optional<double> t_max_check;
  std::optional<double> eps_drift;
  std::optional<double> eps_diff;
  std::optional<std::uint64_t> sampler_seed;
};

/// Fills unset fields of `spec` from a config document.
void merge_config(RunSpec& spec, const nlohmann::json& config);

/// Seed precedence: explicit value, then SDE_SEED, then kDefaultSeed.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& explicit_seed);

/// Entry point; args exclude the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdeinv::cli
