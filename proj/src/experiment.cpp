#include "bubbleopt/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bubbleopt/closed_form.hpp"
#include "bubbleopt/errors.hpp"
#include "bubbleopt/montecarlo.hpp"
#include "bubbleopt/parallel.hpp"
#include "bubbleopt/pde.hpp"
#include "bubbleopt/stopping.hpp"

namespace bubbleopt {

namespace {

namespace fs = std::filesystem;

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::uint64_t seed;
  std::ostringstream report;
  bool inconclusive = false;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(7) << v;
  return os.str();
}

bool is_bessel_call(const ExperimentConfig& cfg) {
  return std::holds_alternative<ReciprocalBessel3D>(cfg.model.dynamics) &&
         std::holds_alternative<TriviallyOne>(cfg.model.deflator) && cfg.payoff.slopes().size() == 2 &&
         cfg.payoff.slopes()[0] == 0.0;
}

bool has_pde(const ExperimentConfig& cfg) {
  return (std::holds_alternative<ReciprocalBessel3D>(cfg.model.dynamics) &&
          std::holds_alternative<TriviallyOne>(cfg.model.deflator)) ||
         std::holds_alternative<LocalVolDiffusion>(cfg.model.dynamics);
}

PathEnsemble make_ensemble(const Context& ctx) {
  return PathEnsemble(ctx.cfg.model, ctx.cfg.montecarlo.paths, ctx.cfg.montecarlo.steps, ctx.seed);
}

void report_delta(Context& ctx, const std::string& title, const DefaultEstimate& d) {
  auto& r = ctx.report;
  r << title << "\n";
  r << "  level        estimate        stderr     E[X_{tau^sigma}]  hit fraction\n";
  for (const auto& le : d.per_level) {
    r << "  " << std::setw(8) << num(le.level) << "  " << std::setw(14) << num(le.estimate) << "  " << std::setw(12)
      << num(le.std_error) << "  " << std::setw(14) << num(le.stopped_payoff) << "  " << std::setw(10)
      << num(le.hit_fraction) << "\n";
  }
  r << "  delta_hat = " << num(d.delta_hat) << " +/- " << num(d.ci_halfwidth) << " (3 sigma), verdict "
    << to_string(d.verdict) << "\n";
  if (d.verdict == DefaultVerdict::Inconclusive) ctx.inconclusive = true;
}

nlohmann::json tau_star_json(const TauStarResult& ts) {
  auto time_or_null = [](double t) { return t == kNever ? nlohmann::json(nullptr) : nlohmann::json(t); };
  nlohmann::json j;
  j["rule"] = describe(ts.rule);
  j["time"] = ts.time;
  j["trigger"] = to_string(ts.trigger);
  if (ts.interval) {
    j["interval"] = {{"lower", ts.interval->lower},
                     {"upper", ts.interval->upper ? nlohmann::json(*ts.interval->upper) : nlohmann::json(nullptr)}};
  }
  j["tau_K"] = time_or_null(ts.tau_k);
  j["tau_tilde"] = ts.tau_tilde;
  j["tau_i"] = nlohmann::json::array();
  for (double t : ts.tau_i) j["tau_i"].push_back(time_or_null(t));
  j["tau_0"] = time_or_null(ts.tau_0);
  j["certificate"] = ts.certificate;
  return j;
}

TauStarResult run_tau_star(Context& ctx, std::ostream& log) {
  const TauStarResult ts = tau_star(ctx.cfg.model, ctx.cfg.payoff);
  const auto j = tau_star_json(ts);
  write_file(ctx.dir / "tau_star.json", j.dump(2) + "\n");
  log << j.dump(2) << "\n";
  ctx.report << "tau*\n";
  for (const auto& line : ts.certificate) ctx.report << "  " << line << "\n";
  return ts;
}

void run_delta(Context& ctx) {
  const auto& mc = ctx.cfg.montecarlo;
  const TauStarResult ts = tau_star(ctx.cfg.model, ctx.cfg.payoff);
  const StoppingRule rule = mc.rule.value_or(ts.rule);
  const PathEnsemble ens = make_ensemble(ctx);
  const DefaultEstimate d = estimate_delta(ens, rule, mc.schedule, ctx.cfg.payoff, mc.estimator);
  std::ostringstream csv;
  write_delta_csv(csv, d);
  write_file(ctx.dir / "delta.csv", csv.str());
  report_delta(ctx, "delta(" + describe(rule) + ")", d);
  if (ctx.cfg.model.deflator_is_ui_martingale()) {
    const Estimate cf = delta_closed_form_ui_martingale(ens, rule);
    ctx.report << "  L_0 - E[L_tau] = " << num(cf.value) << " +/- " << num(cf.ci()) << "\n";
    const auto* fixed = std::get_if<FixedTime>(&rule);
    if (is_bessel_call(ctx.cfg) && fixed && fixed->t > 0.0)
      ctx.report << "  closed form 2 s0 Phi(-1/(s0 sqrt t)) = "
                 << num(martingale_defect(ctx.cfg.model.s0(), 0.0, fixed->t)) << "\n";
  }
}

ValueEstimate run_value(Context& ctx, const TauStarResult& ts, const PathEnsemble& ens) {
  const auto& mc = ctx.cfg.montecarlo;
  const ValueEstimate v = value_theorem1(ens, ts.rule, mc.schedule, ctx.cfg.payoff, mc.estimator);
  std::ostringstream csv;
  csv << std::setprecision(17) << "quantity,estimate,stderr\n";
  csv << "payoff_at_tau_star," << v.payoff_at_tau_star.value << "," << v.payoff_at_tau_star.std_error << "\n";
  csv << "delta_at_tau_star," << v.delta_at_tau_star.delta_hat << "," << v.delta_at_tau_star.std_error << "\n";
  csv << "value_tau_star," << v.v_hat << "," << v.std_error << "\n";
  csv << "payoff_at_horizon," << v.payoff_at_horizon.value << "," << v.payoff_at_horizon.std_error << "\n";
  csv << "delta_at_horizon," << v.delta_at_horizon.delta_hat << "," << v.delta_at_horizon.std_error << "\n";
  csv << "value_horizon," << v.v_horizon << "," << v.std_error_horizon << "\n";
  write_file(ctx.dir / "value.csv", csv.str());
  for (const auto& [name, d] : {std::pair{"delta_tau_star.csv", &v.delta_at_tau_star},
                                std::pair{"delta_horizon.csv", &v.delta_at_horizon}}) {
    std::ostringstream dc;
    write_delta_csv(dc, *d);
    write_file(ctx.dir / name, dc.str());
  }

  auto& r = ctx.report;
  r << "value decomposition\n";
  r << "  E[X_tau*] = " << num(v.payoff_at_tau_star.value) << " +/- " << num(v.payoff_at_tau_star.ci()) << "\n";
  report_delta(ctx, "  delta(tau*)", v.delta_at_tau_star);
  r << "  E[X_T] = " << num(v.payoff_at_horizon.value) << " +/- " << num(v.payoff_at_horizon.ci()) << "\n";
  report_delta(ctx, "  delta(T)", v.delta_at_horizon);
  r << "  v_hat = E[X_tau*] + delta(tau*) = " << num(v.v_hat) << " +/- " << num(3.0 * v.std_error) << "\n";
  r << "  v_hat = E[X_T] + delta(T)       = " << num(v.v_horizon) << " +/- " << num(3.0 * v.std_error_horizon) << "\n";
  r << "  difference = " << num(v.v_hat - v.v_horizon) << " (combined 3 sigma "
    << num(3.0 * (v.std_error + v.std_error_horizon)) << ")\n";

  const Existence ex = existence_verdict(ts, v.delta_at_tau_star);
  r << "existence verdict: " << to_string(ex);
  if (ex == Existence::Exists) r << " (smallest optimal time " << describe(ts.rule) << ")";
  r << "\n";
  if (ex == Existence::Inconclusive) ctx.inconclusive = true;

  const OptimalityVerdict ov = check_optimality(ens, ts.rule, ts, v.delta_at_tau_star);
  r << "check_optimality(" << describe(ts.rule) << "): " << to_string(ov.kind) << " - " << ov.reason << "\n";
  if (ov.kind == OptimalityKind::Inconclusive) ctx.inconclusive = true;
  return v;
}

CoupledSolution run_pde(Context& ctx) {
  const PdeProblem p = pde_problem_for(ctx.cfg, Terminal::Gbar);
  const CoupledSolution sol = solve_coupled(p);
  const PdeSettings settings = ctx.cfg.pde.value_or(PdeSettings{});
  {
    std::ostringstream csv;
    write_pde_csv(csv, sol, settings.csv_x_max);
    write_file(ctx.dir / "pde.csv", csv.str());
  }
  std::ostringstream pts;
  pts << std::setprecision(17) << "x,ebar,a,e,gap\n";
  auto& r = ctx.report;
  r << "pde (t = 0), truncation radius R = " << num(sol.ebar.truncation_radius) << ", " << sol.ebar.x.size()
    << " nodes, " << sol.ebar.convergence_history.size() << " radii\n";
  r << "  parity sup|a + ebar - x| = " << num(parity_residual(sol.a, sol.ebar)) << "\n";
  const bool bessel = is_bessel_call(ctx.cfg);
  const double K = threshold_k(ctx.cfg.payoff);
  const double T = ctx.cfg.model.horizon;
  for (double x : settings.report_x) {
    const double eb = sol.ebar.value_at(x, 0);
    const double a = sol.a.value_at(x, 0);
    const double e = sol.e.value_at(x, 0);
    const double gap = sol.gap.value_at(x, 0);
    pts << x << "," << eb << "," << a << "," << e << "," << gap << "\n";
    r << "  x = " << num(x) << ": ebar " << num(eb) << ", a " << num(a) << ", e " << num(e) << ", a - e " << num(gap);
    if (bessel && x > 0.0 && K == 1.0) r << " (closed form " << num(martingale_defect(x, 0.0, T)) << ")";
    r << "\n";
  }
  if (bessel) {
    r << "  limits as x -> inf: a - (x - K) -> " << num(american_call_far_field_gap(K, 0.0, T)) << ", e -> "
      << num(european_call_limit(K, 0.0, T)) << "\n";
  }
  write_file(ctx.dir / "pde_points.csv", pts.str());
  return sol;
}

void run_dump_paths(Context& ctx) {
  const PathEnsemble ens = make_ensemble(ctx);
  const std::size_t n = std::min(ctx.cfg.montecarlo.dump_paths, ens.size());
  std::ostringstream csv;
  csv << std::setprecision(17) << "t,path_id,S,beta,Z,L,X\n";
  for (std::size_t i = 0; i < n; ++i) {
    const PathBundle p = ens.path(i);
    const Eigen::ArrayXd x = payoff_process(p, ctx.cfg.payoff);
    for (Eigen::Index k = 0; k < p.s.size(); ++k)
      csv << ens.time_grid()[k] << "," << i << "," << p.s[k] << "," << p.beta[k] << "," << p.z[k] << "," << p.l[k] << ","
          << x[k] << "\n";
  }
  write_file(ctx.dir / "paths.csv", csv.str());
  ctx.report << "dumped " << n << " paths to paths.csv\n";
}

void run_verify_all(Context& ctx, std::ostream& log) {
  const TauStarResult ts = run_tau_star(ctx, log);
  const PathEnsemble ens = make_ensemble(ctx);
  const std::size_t bad = verify_certificate(ens, ts, ctx.cfg.payoff);
  ctx.report << "  pathwise certificate violations: " << bad << "\n";
  if (bad > 0) throw NumericalError("tau* certificate fails on " + std::to_string(bad) + " paths");
  run_value(ctx, ts, ens);
  if (ctx.cfg.model.deflator_is_ui_martingale()) {
    const Estimate cf = delta_closed_form_ui_martingale(ens, ts.rule);
    ctx.report << "L_0 - E[L_tau*] = " << num(cf.value) << " +/- " << num(cf.ci()) << "\n";
  }
  if (has_pde(ctx.cfg) && ctx.cfg.pde) {
    const CoupledSolution sol = run_pde(ctx);
    const PayoffSpec& payoff = ctx.cfg.payoff;
    const Estimate gbar_mean = terminal_mean(ens, [&](double s) { return eval_gbar(payoff, s); });
    const double s0 = ctx.cfg.model.s0();
    const double mc = s0 - gbar_mean.value;
    ctx.report << "MC vs PDE: S0 - E[gbar(S_T)] = " << num(mc) << " +/- " << num(gbar_mean.ci()) << ", a(S0, 0) = "
               << num(sol.a.value_at(s0, 0)) << "\n";
  }
}

}  // namespace

Pipeline parse_pipeline(const std::string& name) {
  if (name == "delta") return Pipeline::Delta;
  if (name == "value") return Pipeline::Value;
  if (name == "tau-star") return Pipeline::TauStar;
  if (name == "price-pde") return Pipeline::PricePde;
  if (name == "verify-all") return Pipeline::VerifyAll;
  if (name == "dump-paths") return Pipeline::DumpPaths;
  throw ValidationError("unknown pipeline '" + name + "'");
}

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Delta:
      return "delta";
    case Pipeline::Value:
      return "value";
    case Pipeline::TauStar:
      return "tau-star";
    case Pipeline::PricePde:
      return "price-pde";
    case Pipeline::VerifyAll:
      return "verify-all";
    case Pipeline::DumpPaths:
      return "dump-paths";
  }
  return "?";
}

int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  try {
    const auto seed = opts.seed ? opts.seed : cfg.montecarlo.seed;
    if (!seed) throw ValidationError("engine.montecarlo.seed: missing required field (or pass --seed)");
    if (opts.threads) {
      if (*opts.threads == 0) throw ValidationError("--threads: must be positive");
      parallel::set_thread_count(*opts.threads);
    }
    Context ctx{cfg, fs::path(opts.out_dir.value_or(cfg.outputs.dir)), *seed, {}, false};
    fs::create_directories(ctx.dir);
    ctx.report << "experiment " << cfg.name << ", pipeline " << to_string(opts.pipeline) << "\n";
    ctx.report << "model: " << cfg.model.describe() << "\n";
    ctx.report << "payoff: " << cfg.payoff.describe() << "\n";
    ctx.report << "paths " << cfg.montecarlo.paths << ", steps " << cfg.montecarlo.steps << ", seed " << *seed << "\n";

    switch (opts.pipeline) {
      case Pipeline::Delta:
        run_delta(ctx);
        break;
      case Pipeline::Value: {
        const TauStarResult ts = tau_star(cfg.model, cfg.payoff);
        run_value(ctx, ts, make_ensemble(ctx));
        break;
      }
      case Pipeline::TauStar:
        run_tau_star(ctx, log);
        break;
      case Pipeline::PricePde:
        run_pde(ctx);
        break;
      case Pipeline::VerifyAll:
        run_verify_all(ctx, log);
        break;
      case Pipeline::DumpPaths:
        run_dump_paths(ctx);
        break;
    }
    write_file(ctx.dir / cfg.outputs.report, ctx.report.str());
    if (opts.pipeline != Pipeline::TauStar) log << ctx.report.str();
    return ctx.inconclusive ? exit_code::kInconclusive : exit_code::kOk;
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << "\n";
    return exit_code::kValidation;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    return exit_code::kNumerical;
  } catch (const fs::filesystem_error& e) {
    log << "validation error: " << e.what() << "\n";
    return exit_code::kValidation;
  }
}

}  // namespace bubbleopt
