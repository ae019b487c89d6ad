// Command-line front end: one subcommand per pipeline.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bubbleopt/config.hpp"
#include "bubbleopt/errors.hpp"
#include "bubbleopt/experiment.hpp"

int main(int argc, char** argv) {
  using namespace bubbleopt;

  CLI::App app{"Optimal exercise of American call-type options in markets with bubbles"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;

  const std::pair<const char*, const char*> commands[] = {
      {"delta", "Estimate the default delta(tau) at tau* or the configured rule"},
      {"value", "Estimate v through both value decompositions and the existence verdict"},
      {"tau-star", "Construct tau* and print its certificate as JSON"},
      {"price-pde", "Solve for ebar, a, e and a - e by finite differences"},
      {"verify-all", "Run tau-star, value and (for diffusions) price-pde with cross-checks"},
      {"dump-paths", "Write sample paths as CSV"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed; overrides the config");
    sub->add_option("--threads", threads, "Worker threads (results do not depend on it)");
    sub->add_option("--out-dir", out_dir, "Output directory; overrides the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::kValidation;
  }

  RunOptions opts;
  opts.pipeline = parse_pipeline(app.get_subcommands().front()->get_name());
  opts.seed = seed;
  opts.threads = threads;
  opts.out_dir = out_dir;

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return exit_code::kValidation;
  }
  return run_experiment(cfg, opts, std::cout);
}
