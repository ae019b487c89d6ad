#include "bubbleopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "bubbleopt/errors.hpp"

namespace bubbleopt {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ValidationError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_map(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) fail(path.empty() ? "<root>" : path, "expected a mapping");
}

/// Rejects keys outside `allowed`, which catches typos in hand-written configs.
void only_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(join(path, key), "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, "cannot parse '" + n.Scalar() + "'");
  }
}

template <typename T>
T required(const YAML::Node& parent, const std::string& path, const std::string& key) {
  const YAML::Node n = parent[key];
  if (!n) fail(join(path, key), "missing required field");
  return scalar<T>(n, join(path, key));
}

template <typename T>
T optional_or(const YAML::Node& parent, const std::string& path, const std::string& key, T fallback) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  return scalar<T>(n, join(path, key));
}

double positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be positive");
  return v;
}

std::size_t positive_count(const YAML::Node& parent, const std::string& path, const std::string& key, std::size_t fallback) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  const auto v = scalar<long long>(n, join(path, key));
  if (v <= 0) fail(join(path, key), "must be positive");
  return static_cast<std::size_t>(v);
}

std::vector<double> number_list(const YAML::Node& parent, const std::string& path, const std::string& key) {
  const YAML::Node n = parent[key];
  const std::string p = join(path, key);
  if (!n) fail(p, "missing required field");
  if (!n.IsSequence()) fail(p, "expected a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<double>(n[i], p + "[" + std::to_string(i) + "]"));
  return out;
}

/// Runs a constructor that validates, re-labelling its error with the field path.
template <typename F>
auto at(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(path + ":", 0) == 0 || what.rfind(path + ".", 0) == 0) throw;
    fail(path, what);
  }
}

PayoffSpec parse_payoff(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const auto kind = required<std::string>(n, path, "kind");
  if (kind == "call") {
    only_keys(n, path, {"kind", "strike"});
    const double k = positive(required<double>(n, path, "strike"), join(path, "strike"));
    return at(path, [&] { return PayoffSpec::call(k); });
  }
  if (kind == "piecewise") {
    only_keys(n, path, {"kind", "breakpoints", "slopes"});
    auto b = number_list(n, path, "breakpoints");
    auto s = number_list(n, path, "slopes");
    return at(path, [&] { return PayoffSpec::piecewise(b, s); });
  }
  fail(join(path, "kind"), "expected 'call' or 'piecewise', got '" + kind + "'");
}

VolFunction parse_vol(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const auto kind = required<std::string>(n, path, "kind");
  if (kind == "power") {
    only_keys(n, path, {"kind", "coefficient", "exponent"});
    PowerVol p{required<double>(n, path, "coefficient"), required<double>(n, path, "exponent")};
    return at(path, [&] { return VolFunction(p); });
  }
  if (kind == "table") {
    only_keys(n, path, {"kind", "xs", "alphas"});
    TableVol t{number_list(n, path, "xs"), number_list(n, path, "alphas")};
    return at(path, [&] { return VolFunction(t); });
  }
  fail(join(path, "kind"), "expected 'power' or 'table', got '" + kind + "'");
}

RateCurve parse_rate(const YAML::Node& n, const std::string& path) {
  if (!n) return RateCurve{};
  if (n.IsScalar()) {
    const double r = scalar<double>(n, path);
    return at(path, [&] { return RateCurve::constant(r); });
  }
  require_map(n, path);
  only_keys(n, path, {"times", "rates"});
  std::vector<double> times = n["times"] ? number_list(n, path, "times") : std::vector<double>{};
  auto rates = number_list(n, path, "rates");
  return at(path, [&] { return RateCurve::piecewise(times, rates); });
}

DeflatorSpec parse_deflator(const YAML::Node& n, const std::string& path) {
  if (!n) return TriviallyOne{};
  require_map(n, path);
  only_keys(n, path, {"kind", "z0"});
  const auto kind = required<std::string>(n, path, "kind");
  if (kind == "one") return TriviallyOne{};
  if (kind == "reciprocal_bessel") return ReciprocalBesselDeflator{optional_or<double>(n, path, "z0", 1.0)};
  if (kind == "reciprocal_of_price") return ReciprocalOfPrice{};
  fail(join(path, "kind"), "expected 'one', 'reciprocal_bessel' or 'reciprocal_of_price', got '" + kind + "'");
}

ModelSpec parse_model(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const auto kind = required<std::string>(n, path, "kind");
  ModelSpec m;
  m.horizon = positive(required<double>(n, path, "horizon"), join(path, "horizon"));
  m.deflator = parse_deflator(n["deflator"], join(path, "deflator"));
  if (kind == "reciprocal_bessel") {
    only_keys(n, path, {"kind", "horizon", "deflator", "s0"});
    m.dynamics = ReciprocalBessel3D{positive(required<double>(n, path, "s0"), join(path, "s0"))};
  } else if (kind == "bessel_3d") {
    only_keys(n, path, {"kind", "horizon", "deflator", "s0"});
    m.dynamics = Bessel3D{positive(required<double>(n, path, "s0"), join(path, "s0"))};
  } else if (kind == "local_vol") {
    only_keys(n, path, {"kind", "horizon", "deflator", "s0", "rate", "vol"});
    if (!n["vol"]) fail(join(path, "vol"), "missing required field");
    m.dynamics = LocalVolDiffusion{positive(required<double>(n, path, "s0"), join(path, "s0")),
                                   parse_rate(n["rate"], join(path, "rate")), parse_vol(n["vol"], join(path, "vol"))};
  } else if (kind == "deterministic_jump") {
    only_keys(n, path, {"kind", "horizon", "deflator", "t0", "s_pre", "s_post", "beta_pre", "beta_post"});
    m.dynamics = DeterministicJump{required<double>(n, path, "t0"), required<double>(n, path, "s_pre"),
                                   required<double>(n, path, "s_post"), optional_or<double>(n, path, "beta_pre", 1.0),
                                   required<double>(n, path, "beta_post")};
  } else {
    fail(join(path, "kind"),
         "expected 'reciprocal_bessel', 'bessel_3d', 'local_vol' or 'deterministic_jump', got '" + kind + "'");
  }
  at(path, [&] {
    m.validate();
    return 0;
  });
  return m;
}

StoppingRule parse_rule(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  const auto kind = required<std::string>(n, path, "kind");
  if (kind == "fixed") {
    only_keys(n, path, {"kind", "t"});
    return FixedTime{required<double>(n, path, "t")};
  }
  if (kind == "hitting") {
    only_keys(n, path, {"kind", "threshold", "direction", "activation"});
    HittingTime h;
    h.threshold = required<double>(n, path, "threshold");
    const auto dir = optional_or<std::string>(n, path, "direction", "up");
    if (dir == "up") {
      h.direction = Direction::Up;
    } else if (dir == "down") {
      h.direction = Direction::Down;
    } else {
      fail(join(path, "direction"), "expected 'up' or 'down'");
    }
    h.activation = optional_or<double>(n, path, "activation", 0.0);
    return h;
  }
  fail(join(path, "kind"), "expected 'fixed' or 'hitting', got '" + kind + "'");
}

MonteCarloSettings parse_montecarlo(const YAML::Node& n, const std::string& path) {
  MonteCarloSettings s;
  if (!n) return s;
  require_map(n, path);
  only_keys(n, path, {"paths", "steps", "seed", "levels", "target", "estimator", "rule", "dump_paths"});
  s.paths = positive_count(n, path, "paths", s.paths);
  s.steps = positive_count(n, path, "steps", s.steps);
  if (n["seed"]) s.seed = scalar<std::uint64_t>(n["seed"], join(path, "seed"));
  if (n["levels"]) s.schedule.levels = number_list(n, path, "levels");
  const auto target = optional_or<std::string>(n, path, "target", "L");
  if (target == "L") {
    s.schedule.target = LocalizedProcess::L;
  } else if (target == "Z") {
    s.schedule.target = LocalizedProcess::Z;
  } else {
    fail(join(path, "target"), "expected 'L' or 'Z'");
  }
  at(join(path, "levels"), [&] {
    s.schedule.validate();
    return 0;
  });
  const auto est = optional_or<std::string>(n, path, "estimator", "control");
  if (est == "control") {
    s.estimator = EstimatorKind::MartingaleControl;
  } else if (est == "plain") {
    s.estimator = EstimatorKind::Plain;
  } else {
    fail(join(path, "estimator"), "expected 'control' or 'plain'");
  }
  if (n["rule"]) s.rule = parse_rule(n["rule"], join(path, "rule"));
  s.dump_paths = positive_count(n, path, "dump_paths", s.dump_paths);
  return s;
}

PdeSettings parse_pde(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  only_keys(n, path,
            {"core_cells", "core_upper", "time_steps", "rannacher_steps", "r_factor", "max_doublings", "tolerance",
             "focus_upper", "save_every", "report_x", "csv_x_max"});
  PdeSettings s;
  auto& g = s.grid;
  g.core_cells = static_cast<Eigen::Index>(positive_count(n, path, "core_cells", static_cast<std::size_t>(g.core_cells)));
  g.time_steps = static_cast<Eigen::Index>(positive_count(n, path, "time_steps", static_cast<std::size_t>(g.time_steps)));
  g.core_upper = optional_or<double>(n, path, "core_upper", g.core_upper);
  g.rannacher_steps = optional_or<int>(n, path, "rannacher_steps", g.rannacher_steps);
  g.r_factor = positive(optional_or<double>(n, path, "r_factor", g.r_factor), join(path, "r_factor"));
  g.max_doublings = optional_or<int>(n, path, "max_doublings", g.max_doublings);
  if (g.max_doublings < 0) fail(join(path, "max_doublings"), "must be nonnegative");
  g.tolerance = positive(optional_or<double>(n, path, "tolerance", g.tolerance), join(path, "tolerance"));
  g.focus_upper = optional_or<double>(n, path, "focus_upper", g.focus_upper);
  g.save_every = static_cast<Eigen::Index>(optional_or<long long>(n, path, "save_every", 0));
  if (n["report_x"]) s.report_x = number_list(n, path, "report_x");
  for (std::size_t i = 0; i < s.report_x.size(); ++i)
    if (!(s.report_x[i] >= 0.0)) fail(join(path, "report_x") + "[" + std::to_string(i) + "]", "must be nonnegative");
  s.csv_x_max = positive(optional_or<double>(n, path, "csv_x_max", s.csv_x_max), join(path, "csv_x_max"));
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("<root>: malformed YAML: ") + e.what());
  }
  if (!root || root.IsNull()) throw ValidationError("<root>: empty config");
  require_map(root, "");
  only_keys(root, "", {"name", "model", "payoff", "engine", "outputs"});

  ExperimentConfig cfg;
  cfg.name = optional_or<std::string>(root, "", "name", cfg.name);
  if (!root["model"]) fail("model", "missing required field");
  cfg.model = parse_model(root["model"], "model");
  if (!root["payoff"]) fail("payoff", "missing required field");
  cfg.payoff = parse_payoff(root["payoff"], "payoff");

  if (const YAML::Node engine = root["engine"]) {
    require_map(engine, "engine");
    only_keys(engine, "engine", {"montecarlo", "pde"});
    cfg.montecarlo = parse_montecarlo(engine["montecarlo"], "engine.montecarlo");
    if (engine["pde"]) cfg.pde = parse_pde(engine["pde"], "engine.pde");
  }
  if (const YAML::Node out = root["outputs"]) {
    require_map(out, "outputs");
    only_keys(out, "outputs", {"dir", "report"});
    cfg.outputs.dir = optional_or<std::string>(out, "outputs", "dir", cfg.outputs.dir);
    cfg.outputs.report = optional_or<std::string>(out, "outputs", "report", cfg.outputs.report);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

PdeProblem pde_problem_for(const ExperimentConfig& cfg, Terminal terminal) {
  PdeProblem p;
  if (const auto* b = std::get_if<ReciprocalBessel3D>(&cfg.model.dynamics)) {
    if (!std::holds_alternative<TriviallyOne>(cfg.model.deflator))
      throw ValidationError("model: the PDE pipeline needs Z = 1");
    // 1/|3-D Brownian motion| solves dS = -S^2 dB.
    p.vol = VolFunction(PowerVol{1.0, 2.0});
    p.s0 = b->s0;
  } else if (const auto* lv = std::get_if<LocalVolDiffusion>(&cfg.model.dynamics)) {
    p.vol = lv->vol;
    p.rate = lv->rate;
    p.s0 = lv->s0;
  } else {
    throw ValidationError("model: the PDE pipeline needs a diffusion model (reciprocal_bessel or local_vol)");
  }
  p.terminal = terminal;
  p.growth = terminal == Terminal::Gbar ? GrowthClass::StrictlySublinear : GrowthClass::Linear;
  p.payoff = cfg.payoff;
  p.horizon = cfg.model.horizon;
  if (cfg.pde) p.grid = cfg.pde->grid;
  p.validate();
  return p;
}

}  // namespace bubbleopt
