#pragma once

#include "synthfid/mogp.hpp"
#include "synthfid/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace synthfid::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kNumerical = 3 };

enum class CorrelationMode { Interactive, Explicit, Random };

/// Everything that determines a run's outputs besides the input data.
struct RunConfig {
  FitConfig fit;
  PriorDrawMode prior_draw = PriorDrawMode::Matrix;
  CorrelationMode correlation_mode = CorrelationMode::Random;
  std::vector<double> correlations;
  int samples = 1;
  std::uint64_t seed = 0;
  std::string output;

  nlohmann::json to_json() const;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  /// Whether `in` is an interactive terminal; interactive mode requires it.
  bool input_is_tty = false;
};

/// Runs the command line (arguments exclude the program name) and returns
/// the process exit code. `default_seed` stands in for SYNTHFID_SEED.
int run(const std::vector<std::string>& args, Streams io, std::uint64_t default_seed = 0);

/// Seed from the SYNTHFID_SEED environment variable, 0 when unset.
std::uint64_t seed_from_environment();

}  // namespace synthfid::cli
