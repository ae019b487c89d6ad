#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bubbleopt/models.hpp"
#include "bubbleopt/montecarlo.hpp"
#include "bubbleopt/payoff.hpp"
#include "bubbleopt/pde.hpp"

namespace bubbleopt {

struct MonteCarloSettings {
  std::size_t paths = 100000;
  std::size_t steps = 1000;
  std::optional<std::uint64_t> seed;
  LocalizingSchedule schedule{{2.0, 4.0, 8.0, 16.0}, LocalizedProcess::L};
  EstimatorKind estimator = EstimatorKind::MartingaleControl;
  /// Rule for the delta pipeline; tau* when unset.
  std::optional<StoppingRule> rule;
  std::size_t dump_paths = 10;
};

struct PdeSettings {
  PdeGridSettings grid;
  /// Nodes reported at t = 0.
  std::vector<double> report_x{0.5, 1.0, 2.0};
  /// CSV dump covers x <= csv_x_max.
  double csv_x_max = 8.0;
};

struct OutputSettings {
  std::string dir = "out";
  std::string report = "report.txt";
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelSpec model{ReciprocalBessel3D{}};
  PayoffSpec payoff = PayoffSpec::call(1.0);
  MonteCarloSettings montecarlo;
  std::optional<PdeSettings> pde;
  OutputSettings outputs;
};

/// Parses YAML text; errors are ValidationError messages prefixed with the
/// offending field path, e.g. "engine.montecarlo.paths: must be positive".
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// PDE problem for diffusion models: alpha(x) = x^2 for the reciprocal Bessel
/// model, the configured vol and rate for local-vol models.
PdeProblem pde_problem_for(const ExperimentConfig& cfg, Terminal terminal);

}  // namespace bubbleopt
