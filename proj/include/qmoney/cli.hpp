#pragma once

// Experiment runner: resolved configuration in, summary JSON and artifacts out.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qmoney::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

inline constexpr const char* kMasterSecretEnv = "QMONEY_MASTER_SECRET";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything that can change a summary. Worker count and the master secret
// are execution details and deliberately live outside it.
struct RunConfig {
  std::string subcommand;
  std::string scheme = "four-state";  // four-state | listed
  std::string state_file;             // listed: JSON array of [[re, im], [re, im]]
  std::uint64_t n = 16;
  std::string policy = "strict";      // strict | noisy
  double return_frac = 0.05;
  double reissue_frac = 0.10;
  std::string variant = "serial";     // bt-attack: serial | parallel
  bool live = true;                   // ev-bomb
  std::uint64_t rounds = 0;           // 0: the subcommand's default
  double epsilon = 0.1;
  double c_fit = 1.0;
  double eta = 0.1;
  double nu_final = 0.3;
  double f_budget = 0.1;
  std::string mode = "sampled";
  std::uint64_t trials = 1000;
  std::uint64_t master_seed = 1;
  std::uint64_t points = 200;         // figure
  std::string out;
  std::string transcript;
  std::string reconstruction;

  bool operator==(const RunConfig&) const = default;
};

const std::vector<std::string>& subcommands();

nlohmann::json to_json(const RunConfig& c);
// Unknown keys and wrong types are config errors.
RunConfig config_from_json(const nlohmann::json& j);
// Range checks; throws ConfigError.
void validate(const RunConfig& c);

struct ExecOptions {
  unsigned workers = 1;
  std::optional<std::string> master_secret;
};

// Runs one subcommand and returns its summary. Writes the artifacts named in
// the config. Throws ConfigError, or UnderflowError / std::runtime_error on
// numerical failure.
nlohmann::json run(const RunConfig& config, const ExecOptions& exec);

// argv front end; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace qmoney::cli
