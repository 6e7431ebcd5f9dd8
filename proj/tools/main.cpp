// tfmean command-line front end.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfmean/bounds.hpp"
#include "tfmean/checks.hpp"
#include "tfmean/error.hpp"
#include "tfmean/estimators.hpp"
#include "tfmean/experiments.hpp"
#include "tfmean/point_io.hpp"
#include "tfmean/sampling.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;

std::string num(double x, int digits) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string num(tfm::ExtReal x, int digits) { return num(x.to_double(), digits); }

void kv(const std::string& key, const std::string& value) { std::cout << key << '=' << value << '\n'; }

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string space, transform, input;
  std::string method = "auto";
  std::size_t max_epochs = 500;
  double tol_obj = 1e-10, tol_step = 1e-9, prox_lambda0 = 1.0, floor = 1e-9;
  std::uint64_t seed = 0;
  int digits = 10;
};

void add_estimate(CLI::App& app, EstimateArgs& a) {
  auto* c = app.add_subcommand("estimate", "Empirical transformed mean of a points CSV");
  c->add_option("--space", a.space, "Space spec: euclidean:<d>, spd:<d>, tree:<edge-list file>, star:<legs>:<len>")
      ->required();
  c->add_option("--transform", a.transform,
                "Transform spec: power:<alpha>, identity, huber:<kink>, pseudo-huber:<scale>, log-cosh, entropic")
      ->required();
  c->add_option("--input", a.input, "Points CSV (one point per row; tree rows are edge,offset)")->required();
  c->add_option("--method", a.method, "Solver: weiszfeld, cyclic_prox or auto")->capture_default_str();
  c->add_option("--max-epochs", a.max_epochs, "Epoch cap (count)")->capture_default_str();
  c->add_option("--tol-obj", a.tol_obj, "Relative objective decrease per epoch (dimensionless)")->capture_default_str();
  c->add_option("--tol-step", a.tol_step, "Point movement per epoch (distance units)")->capture_default_str();
  c->add_option("--prox-lambda0", a.prox_lambda0, "Initial prox step (distance^2 / objective units)")
      ->capture_default_str();
  c->add_option("--weiszfeld-floor", a.floor, "Coincidence distance floor (distance units)")->capture_default_str();
  c->add_option("--seed", a.seed, "Shuffle seed for cyclic_prox (integer)")->capture_default_str();
  c->add_option("--digits", a.digits, "Significant digits of the printed point (0 = shortest round trip)")
      ->capture_default_str();
}

int run_estimate(const EstimateArgs& a) {
  const auto space = tfm::Space::parse(a.space);
  const auto t = tfm::Transform::parse(a.transform);
  tfm::SolverConfig cfg;
  cfg.method = tfm::parse_solver_method(a.method);
  cfg.max_epochs = a.max_epochs;
  cfg.tol_obj = a.tol_obj;
  cfg.tol_step = a.tol_step;
  cfg.prox_lambda0 = a.prox_lambda0;
  cfg.weiszfeld_floor = a.floor;
  cfg.shuffle_seed = a.seed;
  cfg.validate();
  const auto sample = tfm::load_points(a.input, space);
  const auto res = tfm::estimate(space, t, sample, cfg);
  std::cout << tfm::format_point(space, res.point, a.digits) << '\n';
  nlohmann::ordered_json j;
  j["objective"] = res.objective;
  j["epochs"] = res.epochs_used;
  j["converged"] = res.converged;
  j["final_step"] = res.final_step;
  j["method"] = std::string(tfm::to_string(res.method));
  j["n"] = sample.size();
  std::cout << j.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- experiments

struct ConfigFlag {
  const char* key;
  const char* help;
};

// Flags mirror config keys one-to-one (underscores become dashes, solver.x
// becomes --solver-x).
const std::vector<ConfigFlag> kCommonFlags = {
    {"distribution", "Distribution spec, e.g. radial:pareto:1.8:1@euclidean:16"},
    {"transform", "Transform spec, e.g. power:1.5"},
    {"space", "Space spec (must match the distribution's space)"},
    {"n_grid", "Sample sizes, comma separated, strictly increasing (count)"},
    {"replications", "Replications per sample size (count)"},
    {"output", "Records CSV path; aggregates go to <stem>_aggregate.csv"},
    {"slope_window", "Accepted log-log slope window lo,hi (dimensionless)"},
    {"plugin_draws", "Draws behind plug-in moment estimates (count)"},
    {"solver.method", "Solver: weiszfeld, cyclic_prox or auto"},
    {"solver.max_epochs", "Solver epoch cap (count)"},
    {"solver.tol_obj", "Relative objective decrease per epoch (dimensionless)"},
    {"solver.tol_step", "Point movement per epoch (distance units)"},
    {"solver.prox_lambda0", "Initial prox step"},
    {"solver.weiszfeld_floor", "Coincidence distance floor (distance units)"},
};

const std::map<tfm::ExperimentKind, std::vector<ConfigFlag>> kKindFlags = {
    {tfm::ExperimentKind::Rate, {{"plugin_outer", "Outer resamples for E[h(2 sigma-hat)] (count)"}}},
    {tfm::ExperimentKind::Tail,
     {{"tail_r", "Radius r (distance units)"},
      {"tail_prob", "Alternative to tail_r: choose r with P(d(Y,m) > r) = tail_prob (probability)"},
      {"tail_lambda", "Slope fraction lambda of the theorem arm (dimensionless)"},
      {"tail_eta", "Exponent split eta of the theorem arm (dimensionless)"},
      {"tail_corollary_multiplier", "Override of the corollary radius multiplier (0 = 6, or 29/5 for the median)"}}},
    {tfm::ExperimentKind::Breakdown,
     {{"epsilon", "Contamination fraction in [0, 1) (probability)"},
      {"radii", "Contaminant radii, comma separated (distance units)"},
      {"growth_factor", "Divergence threshold for unbounded-slope transforms (ratio)"}}},
    {tfm::ExperimentKind::FastRate, {{"beta", "Concentration exponent beta in [alpha, 2] (dimensionless)"}}},
    {tfm::ExperimentKind::MedianRate,
     {{"bowtie_w", "Bow-tie widening w in [0, 1] (dimensionless)"},
      {"bowtie_draws", "Draws for the bow-tie mass estimate (count)"}}},
    {tfm::ExperimentKind::Stability, {{"n_test", "Test-sample size for the population excess (count)"}}},
};

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_' || c == '.') c = '-';
  return "--" + key;
}

struct ExperimentArgs {
  tfm::ExperimentKind kind;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::map<std::string, std::string> values;
  bool quiet = false;
  CLI::App* app = nullptr;
};

void add_experiment(CLI::App& app, const char* name, const char* help, tfm::ExperimentKind kind,
                    ExperimentArgs& a) {
  a.kind = kind;
  auto* c = app.add_subcommand(name, help);
  a.app = c;
  c->add_option("--config", a.config, "JSON config; flags override its values");
  c->add_option("--seed", a.seed, "Base seed (integer, default 0)");
  c->add_option("--threads", a.threads, "Worker threads (count, default: machine parallelism)");
  c->add_flag("--quiet", a.quiet, "Print only the pass line");
  auto add = [&](const ConfigFlag& f) { c->add_option(flag_name(f.key), a.values[f.key], f.help); };
  for (const auto& f : kCommonFlags) add(f);
  if (auto it = kKindFlags.find(kind); it != kKindFlags.end())
    for (const auto& f : it->second) add(f);
}

int run_experiment_cmd(const ExperimentArgs& a) {
  tfm::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = tfm::ExperimentConfig::load(a.config);
  cfg.kind = a.kind;
  for (const auto& [key, value] : a.values) {
    if (a.app->count(flag_name(key)) > 0) cfg.set(key, value);
  }
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  const auto res = tfm::run_experiment(cfg);
  tfm::write_outputs(cfg, res);
  if (!a.quiet) tfm::write_aggregate_csv(std::cout, res);
  for (const auto& note : res.notes) std::cerr << note << '\n';
  std::cout << "pass=" << (res.pass ? "true" : "false") << '\n';
  return res.pass ? kExitOk : kExitFail;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string property;
  std::string space, transform = "power:2";
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  double constant = 0.0;
};

void add_check(CLI::App& app, CheckArgs& a) {
  auto* c = app.add_subcommand("check", "Seeded property suites");
  c->add_option("property", a.property, "quadruple, midpoint, metric, geodesic, transform or all")
      ->required()
      ->check(CLI::IsMember({"quadruple", "midpoint", "metric", "geodesic", "transform", "all"}));
  c->add_option("--space", a.space, "Space spec (required except for the transform suite)");
  c->add_option("--transform", a.transform, "Transform spec")->capture_default_str();
  c->add_option("--n", a.trials, "Random trials (count)")->capture_default_str();
  c->add_option("--seed", a.seed, "Seed (integer)")->capture_default_str();
  c->add_option("--constant", a.constant, "Quadruple constant override (0 = the transform's own)")
      ->capture_default_str();
}

int run_check(const CheckArgs& a) {
  const auto t = tfm::Transform::parse(a.transform);
  std::vector<tfm::CheckReport> reports;
  const bool all = a.property == "all";
  std::optional<tfm::Space> space;
  if (a.property != "transform") {
    if (a.space.empty()) throw tfm::ConfigError("--space is required for this check");
    space = tfm::Space::parse(a.space);
  }
  if (all || a.property == "quadruple") reports.push_back(tfm::check_quadruple(*space, t, a.trials, a.seed, a.constant));
  if (all || a.property == "midpoint") reports.push_back(tfm::check_midpoint(*space, a.trials, a.seed));
  if (all || a.property == "metric") reports.push_back(tfm::check_metric_axioms(*space, a.trials, a.seed));
  if (all || a.property == "geodesic") reports.push_back(tfm::check_geodesics(*space, a.trials, a.seed));
  if (all || a.property == "transform") reports.push_back(tfm::check_transform(t, a.trials, a.seed));
  bool pass = true;
  for (const auto& r : reports) {
    std::cout << r.name << " trials=" << r.trials << " failures=" << r.failures << " worst=" << num(r.worst, 6)
              << " pass=" << (r.pass ? "true" : "false") << '\n';
    pass = pass && r.pass;
  }
  return pass ? kExitOk : kExitFail;
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
  int digits = 10;
  double sigma_half = 0, sigma_one = 0, sigma_threehalfs = 0, n = 1;
  double alpha = 1.5;
  std::vector<std::string> moments;
  double lambda = 0.9, eta = 0.75, rho = 1.0, r = 1.0, delta = 0.0, R = 1.0;
  std::string transform, distribution;
  double p = 2.0;
  std::size_t draws = 1000000, outer = 200;
  std::uint64_t seed = 0;
  CLI::App *threehalfs = nullptr, *power = nullptr, *tail = nullptr, *median_tail = nullptr, *location = nullptr,
           *general = nullptr, *constants = nullptr;
};

void add_bounds(CLI::App& app, BoundsArgs& a) {
  auto* b = app.add_subcommand("bounds", "Closed-form bound calculators (key=value output)");
  b->require_subcommand(1);
  b->add_option("--digits", a.digits, "Significant digits")->capture_default_str();

  a.threehalfs = b->add_subcommand("three-halfs", "(91/n)(7 s_1/2 s_1 + 2 s_3/2 / n) for tau(x) = x^(3/2)");
  a.threehalfs->add_option("--sigma-half", a.sigma_half, "E[d(Y,m)^(1/2)] (distance^(1/2))")->required();
  a.threehalfs->add_option("--sigma-one", a.sigma_one, "E[d(Y,m)] (distance)")->required();
  a.threehalfs->add_option("--sigma-three-halfs", a.sigma_threehalfs, "E[d(Y,m)^(3/2)] (distance^(3/2))")->required();
  a.threehalfs->add_option("--n", a.n, "Sample size (count)")->required();

  a.constants = b->add_subcommand("power-constants", "C0, C1, C2 of the power-mean bound");
  a.constants->add_option("--alpha", a.alpha, "Power alpha in (1, 2]")->required();

  a.power = b->add_subcommand("power", "Full power-mean risk bound");
  a.power->add_option("--alpha", a.alpha, "Power alpha in (1, 2]")->required();
  a.power->add_option("--moment", a.moments, "Moment a=value meaning E[d(Y,m)^a] = value (repeatable)");
  a.power->add_option("--n", a.n, "Sample size (count)")->required();

  a.tail = b->add_subcommand("tail", "Large-deviation bound for bounded-slope transforms");
  a.tail->add_option("--lambda", a.lambda, "Slope fraction lambda in (0, 1]")->capture_default_str();
  a.tail->add_option("--eta", a.eta, "Exponent split eta in [0, 1]")->capture_default_str();
  a.tail->add_option("--rho", a.rho, "P(d(Y,m) <= r) (probability)")->required();
  a.tail->add_option("--r", a.r, "Radius r (distance units)")->capture_default_str();
  a.tail->add_option("--n", a.n, "Sample size (count)")->required();

  a.median_tail = b->add_subcommand("median-tail", "Large-deviation bound for the median");
  a.median_tail->add_option("--eta", a.eta, "Exponent split eta in [0, 1]")->capture_default_str();
  a.median_tail->add_option("--rho", a.rho, "P(d(Y,m) <= r) (probability)")->required();
  a.median_tail->add_option("--r", a.r, "Radius r (distance units)")->capture_default_str();
  a.median_tail->add_option("--n", a.n, "Sample size (count)")->required();

  a.location = b->add_subcommand("location", "Deterministic distance bound of the mean from a convex set");
  a.location->add_option("--rho", a.rho, "Mass of the set (probability)")->required();
  a.location->add_option("--delta", a.delta, "Diameter of the set (distance units)")->required();
  a.location->add_option("--lambda", a.lambda, "Slope fraction lambda in (0, 1]")->capture_default_str();
  a.location->add_option("--R", a.R, "Radius with tau(R) >= lambda D R (distance units)")->capture_default_str();

  a.general = b->add_subcommand("general", "Explicit-rate bound for tail-robust transforms, plug-in moments");
  a.general->add_option("--transform", a.transform, "Transform spec (tail-robust)")->required();
  a.general->add_option("--distribution", a.distribution, "Distribution spec")->required();
  a.general->add_option("--n", a.n, "Sample size (count)")->required();
  a.general->add_option("--p", a.p, "Hoelder exponent p > 1")->capture_default_str();
  a.general->add_option("--draws", a.draws, "Plug-in draws (count)")->capture_default_str();
  a.general->add_option("--outer", a.outer, "Outer resamples for E[h(2 sigma-hat)^p] (count)")->capture_default_str();
  a.general->add_option("--seed", a.seed, "Seed (integer)")->capture_default_str();
}

int run_bounds(const BoundsArgs& a) {
  const int dg = a.digits;
  if (*a.threehalfs) {
    kv("bound", num(tfm::threehalfs_bound(a.sigma_half, a.sigma_one, a.sigma_threehalfs, a.n), dg));
  } else if (*a.constants) {
    const auto c = tfm::power_rate_constants(a.alpha);
    kv("C0", num(c.c0, dg));
    kv("C1", num(c.c1, dg));
    kv("C2", num(c.c2, dg));
  } else if (*a.power) {
    tfm::MomentSet ms;
    for (const auto& m : a.moments) {
      const auto eq = m.find('=');
      if (eq == std::string::npos) throw tfm::ConfigError("--moment expects a=value, got '" + m + "'");
      const std::string rhs = m.substr(eq + 1);
      const tfm::ExtReal v = rhs == "inf" ? tfm::ExtReal::infinity() : tfm::ExtReal(std::stod(rhs));
      ms.set_power(std::stod(m.substr(0, eq)), v);
    }
    const auto c = tfm::power_rate_constants(a.alpha);
    kv("C0", num(c.c0, dg));
    kv("C1", num(c.c1, dg));
    kv("C2", num(c.c2, dg));
    kv("bound", num(tfm::power_rate_constant(a.alpha, ms, a.n), dg));
  } else if (*a.tail) {
    const auto b = tfm::tail_bound(a.lambda, a.eta, a.rho, a.r, a.n);
    kv("radius_multiplier", num(b.radius_multiplier, dg));
    kv("radius", num(b.radius_multiplier * a.r, dg));
    kv("probability_bound", num(b.probability_bound, dg));
  } else if (*a.median_tail) {
    const auto b = tfm::median_tail_bound(a.eta, a.rho, a.r, a.n);
    kv("radius_multiplier", num(b.radius_multiplier, dg));
    kv("radius", num(b.radius_multiplier * a.r, dg));
    kv("probability_bound", num(b.probability_bound, dg));
  } else if (*a.location) {
    kv("x0", num(tfm::location_x0(a.rho, a.delta, a.lambda), dg));
    const double sq = tfm::deterministic_location_bound(a.rho, a.delta, a.lambda, a.R);
    kv("squared_distance_bound", num(sq, dg));
    kv("distance_bound", num(std::sqrt(sq), dg));
  } else if (*a.general) {
    const auto t = tfm::Transform::parse(a.transform);
    const auto dist = tfm::DistributionSpec::parse(a.distribution);
    const auto ms = tfm::general_rate_moments(dist, t, a.n, a.p, a.draws, a.outer, a.seed);
    const auto g = tfm::general_rate_terms(t, ms, a.n, a.p);
    for (const auto& [tag, e] : ms.entries()) kv(tag, num(e.value, dg));
    kv("S_1", num(g.S_1, dg));
    kv("S_p", num(g.S_p, dg));
    kv("V_n1", num(g.V_n1, dg));
    kv("V_np", num(g.V_np, dg));
    kv("r0", num(g.r0, dg));
    kv("b_n", num(g.b_n, dg));
    kv("bound", num(g.bound, dg));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformed Frechet means in Hadamard spaces: estimation, bounds and Monte Carlo checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tfmean 0.1.0");

  EstimateArgs est;
  add_estimate(app, est);
  std::vector<std::pair<const char*, ExperimentArgs>> exps(6);
  const std::tuple<const char*, const char*, tfm::ExperimentKind> kinds[] = {
      {"rates", "Risk-rate experiment against the explicit bounds", tfm::ExperimentKind::Rate},
      {"tails", "Large-deviation experiment", tfm::ExperimentKind::Tail},
      {"breakdown", "Contamination experiment over a radius grid", tfm::ExperimentKind::Breakdown},
      {"fast", "Fast-rate experiment for concentrated laws", tfm::ExperimentKind::FastRate},
      {"median", "Median rate experiment with the bow-tie precondition", tfm::ExperimentKind::MedianRate},
      {"stability", "Algorithmic-stability diagnostics (n <= 256)", tfm::ExperimentKind::Stability},
  };
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const auto& [name, help, kind] = kinds[i];
    exps[i].first = name;
    add_experiment(app, name, help, kind, exps[i].second);
  }
  CheckArgs chk;
  add_check(app, chk);
  BoundsArgs bnd;
  add_bounds(app, bnd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand("estimate")) return run_estimate(est);
    if (app.got_subcommand("check")) return run_check(chk);
    if (app.got_subcommand("bounds")) return run_bounds(bnd);
    for (const auto& [name, a] : exps)
      if (app.got_subcommand(name)) return run_experiment_cmd(a);
  } catch (const tfm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid number: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
