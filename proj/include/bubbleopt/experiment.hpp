#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "bubbleopt/config.hpp"

namespace bubbleopt {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kInconclusive = 3;
inline constexpr int kNumerical = 4;
}  // namespace exit_code

enum class Pipeline { Delta, Value, TauStar, PricePde, VerifyAll, DumpPaths };

Pipeline parse_pipeline(const std::string& name);
std::string to_string(Pipeline p);

struct RunOptions {
  Pipeline pipeline = Pipeline::VerifyAll;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
};

/// Runs one pipeline, writing CSV tables and a text report into the output
/// directory and a short summary to `log`. Returns an exit code; validation
/// and numerical failures are reported through the code, not thrown.
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace bubbleopt
