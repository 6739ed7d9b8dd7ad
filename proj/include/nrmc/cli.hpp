#pragma once

#include "nrmc/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nrmc::cli {

// Raised for anything the user can fix in the command line or config file.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kOutputDirEnv = "NRMC_OUTPUT_DIR";

using Entries = std::map<std::string, std::string>;

/// Flat "key = value" text, '#' starts a comment. Unknown keys are rejected.
Entries parse_config_text(const std::string& text);
Entries read_config_file(const std::string& path);

/// Expands "a:b:step" (inclusive) or "a,b,c" into values.
std::vector<double> expand_range(const std::string& spec);
bool is_ranged(const std::string& spec);

// The documented key set.
const std::vector<std::string>& known_keys();

struct ExperimentConfig {
  std::string example;
  Index S = 0;
  double rho = 0.1;
  double eps = 0.1;
  double contrast = 1.4;
  std::vector<double> zeta_ratio{1.0};
  std::vector<double> alpha{0.1};
  std::vector<double> varrho{0.1};
  std::vector<std::string> algorithms;
  std::vector<std::string> diagnostics;
  std::vector<std::string> functions{"id"};
  std::string proposal = "neighbor";  // custom example only
  std::string target_file;            // custom example only
  std::string outdir;
  std::uint64_t seed = 1;
  std::int64_t horizon = 0;  // 0: 4 N^2 capped at 20000
  double mix_eps = 1e-5;
  std::int64_t mix_cap = 1'000'000;
  bool joint_law = false;  // mixing time of lifted chains on the joint law
  std::string conductance_mode = "auto";
  Index start = 1;  // 1-based marginal state, momentum +1 for lifted chains
  bool svg = false;
  unsigned threads = 0;
  std::int64_t max_points = 2500;

  Entries resolved;  // every key with its effective value, for report.json
};

/// Validates and converts one point. Ranged scalars are rejected; sweeps
/// expand them first.
ExperimentConfig make_config(const Entries& entries);

/// Entry point shared by the executable and the tests. Returns the exit code
/// (0 ok, 2 usage, 3 numerical failure).
int main(int argc, char** argv);

}  // namespace nrmc::cli
