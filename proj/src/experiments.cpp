#include "tfmean/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "parse_util.hpp"
#include "tfmean/bounds.hpp"
#include "tfmean/checks.hpp"
#include "tfmean/numeric.hpp"
#include "tfmean/rng.hpp"
#include "tfmean/sampling.hpp"

namespace tfm {

using nlohmann::json;

// ---------------------------------------------------------------- config

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Rate: return "rate";
    case ExperimentKind::Tail: return "tail";
    case ExperimentKind::Breakdown: return "breakdown";
    case ExperimentKind::MedianRate: return "median_rate";
    case ExperimentKind::FastRate: return "fast_rate";
    case ExperimentKind::Stability: return "stability";
    case ExperimentKind::Checks: return "checks";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::Rate, ExperimentKind::Tail, ExperimentKind::Breakdown, ExperimentKind::MedianRate,
                 ExperimentKind::FastRate, ExperimentKind::Stability, ExperimentKind::Checks}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (kind != ExperimentKind::Checks) {
    if (distribution.empty()) throw ConfigError("experiment needs a distribution");
    const auto dist = DistributionSpec::parse(distribution);
    if (!space.empty() && Space::parse(space).describe() != dist.space().describe()) {
      throw ConfigError("space '" + space + "' does not match the distribution's space");
    }
    if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 1) throw ConfigError("n_grid entries must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
    }
  } else if (space.empty() && distribution.empty()) {
    throw ConfigError("checks need a space or a distribution");
  }
  if (transform.empty()) throw ConfigError("experiment needs a transform");
  (void)Transform::parse(transform);
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (kind == ExperimentKind::Breakdown) {
    if (radii.empty()) throw ConfigError("breakdown needs a radii grid");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
  }
  if (slope_window && !(slope_window->first <= slope_window->second)) {
    throw ConfigError("slope_window must be [lo, hi] with lo <= hi");
  }
  solver.validate();
}

namespace {

void from_json_obj(const json& j, ExperimentConfig& c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    const auto& v = it.value();
    if (key == "solver") {
      for (auto s = v.begin(); s != v.end(); ++s) {
        const auto& sv = s.value();
        c.set("solver." + s.key(), sv.is_string() ? sv.get<std::string>() : sv.dump());
      }
    } else if (key == "n_grid" || key == "radii" || key == "slope_window") {
      if (!v.is_array()) throw ConfigError("'" + key + "' must be an array");
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ',';
        joined += e.dump();
      }
      c.set(key, joined);
    } else {
      c.set(key, v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
}

std::vector<double> parse_list(std::string_view s, const char* what) {
  std::vector<double> out;
  auto body = detail::trim(s);
  if (!body.empty() && body.front() == '[') body = body.substr(1);
  if (!body.empty() && body.back() == ']') body.remove_suffix(1);
  if (detail::trim(body).empty()) return out;
  for (auto part : detail::split(body, ',')) out.push_back(detail::parse_double(part, what));
  return out;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  auto num = [&] { return detail::parse_double(value, key); };
  auto count = [&] { return static_cast<std::size_t>(detail::parse_uint(value, key)); };
  if (key == "kind") kind = parse_experiment_kind(detail::trim(value));
  else if (key == "distribution") distribution = std::string(detail::trim(value));
  else if (key == "transform") transform = std::string(detail::trim(value));
  else if (key == "space") space = std::string(detail::trim(value));
  else if (key == "n_grid") {
    n_grid.clear();
    for (double x : parse_list(value, "n_grid")) {
      if (!(x >= 1.0) || x != std::floor(x)) throw ConfigError("n_grid entries must be positive integers");
      n_grid.push_back(static_cast<std::size_t>(x));
    }
  } else if (key == "replications") replications = count();
  else if (key == "base_seed" || key == "seed") base_seed = detail::parse_uint(value, key);
  else if (key == "output") output = std::string(detail::trim(value));
  else if (key == "threads") threads = count();
  else if (key == "slope_window") {
    const auto w = parse_list(value, "slope_window");
    if (w.size() != 2) throw ConfigError("slope_window needs two numbers");
    slope_window = std::pair{w[0], w[1]};
  } else if (key == "tail_r") tail_r = num();
  else if (key == "tail_prob") tail_prob = num();
  else if (key == "tail_lambda") tail_lambda = num();
  else if (key == "tail_eta") tail_eta = num();
  else if (key == "tail_corollary_multiplier") tail_corollary_multiplier = num();
  else if (key == "epsilon") epsilon = num();
  else if (key == "radii") radii = parse_list(value, "radii");
  else if (key == "growth_factor") growth_factor = num();
  else if (key == "beta") beta = num();
  else if (key == "bowtie_w") bowtie_w = num();
  else if (key == "bowtie_draws") bowtie_draws = count();
  else if (key == "n_test") n_test = count();
  else if (key == "plugin_draws") plugin_draws = count();
  else if (key == "plugin_outer") plugin_outer = count();
  else if (key == "check_trials") check_trials = count();
  else if (key == "solver.method") solver.method = parse_solver_method(detail::trim(value));
  else if (key == "solver.max_epochs") solver.max_epochs = count();
  else if (key == "solver.tol_obj") solver.tol_obj = num();
  else if (key == "solver.tol_step") solver.tol_step = num();
  else if (key == "solver.prox_lambda0") solver.prox_lambda0 = num();
  else if (key == "solver.weiszfeld_floor") solver.weiszfeld_floor = num();
  else if (key == "solver.shuffle_seed") solver.shuffle_seed = detail::parse_uint(value, key);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig ExperimentConfig::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  from_json_obj(j, c);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["kind"] = std::string(to_string(kind));
  j["distribution"] = distribution;
  j["transform"] = transform;
  j["space"] = space;
  j["n_grid"] = n_grid;
  j["replications"] = replications;
  j["base_seed"] = base_seed;
  j["output"] = output;
  j["threads"] = threads;
  if (slope_window) j["slope_window"] = {slope_window->first, slope_window->second};
  j["tail_r"] = tail_r;
  j["tail_prob"] = tail_prob;
  j["tail_lambda"] = tail_lambda;
  j["tail_eta"] = tail_eta;
  j["tail_corollary_multiplier"] = tail_corollary_multiplier;
  j["epsilon"] = epsilon;
  j["radii"] = radii;
  j["growth_factor"] = growth_factor;
  j["beta"] = beta;
  j["bowtie_w"] = bowtie_w;
  j["bowtie_draws"] = bowtie_draws;
  j["n_test"] = n_test;
  j["plugin_draws"] = plugin_draws;
  j["plugin_outer"] = plugin_outer;
  j["check_trials"] = check_trials;
  j["solver"] = {{"method", std::string(to_string(solver.method))},
                 {"max_epochs", solver.max_epochs},
                 {"tol_obj", solver.tol_obj},
                 {"tol_step", solver.tol_step},
                 {"prox_lambda0", solver.prox_lambda0},
                 {"weiszfeld_floor", solver.weiszfeld_floor},
                 {"shuffle_seed", solver.shuffle_seed}};
  return j.dump(2);
}

// ---------------------------------------------------------------- plumbing

std::uint64_t replication_seed(std::uint64_t base, ExperimentKind kind, std::uint64_t n, std::uint64_t r) {
  return mix_seed({base, static_cast<std::uint64_t>(kind) + 1, n, r});
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double fit_log_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw DomainError("slope fit needs at least two points");
  NeumaierSum sx, sy;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0)) throw DomainError("slope fit needs positive n and values");
    sx.add(std::log(n));
    sy.add(std::log(v));
  }
  const double k = static_cast<double>(points.size());
  const double mx = sx.value() / k, my = sy.value() / k;
  NeumaierSum sxy, sxx;
  for (const auto& [n, v] : points) {
    const double dx = std::log(n) - mx;
    sxy.add(dx * (std::log(v) - my));
    sxx.add(dx * dx);
  }
  if (!(sxx.value() > 0.0)) throw DomainError("slope fit needs at least two distinct n");
  return sxy.value() / sxx.value();
}

namespace {

struct Setup {
  DistributionSpec dist;
  Transform t;
  Point m;
  double chi;
  bool chi_estimated;
  // Loss scale. A point mass has chi = 0 and every distance 0; it scores with 1.
  double loss_chi() const { return chi > 0.0 ? chi : 1.0; }
};

Setup make_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  auto dist = DistributionSpec::parse(cfg.distribution);
  auto t = Transform::parse(cfg.transform);
  Point m = population_mean(dist, t);
  bool est = false;
  const double chi = radius_median(dist, &est, cfg.plugin_draws, mix_seed({cfg.base_seed, 0x636869ULL}));
  return {std::move(dist), t, std::move(m), chi, est};
}

void common_metadata(ExperimentResult& r, const ExperimentConfig& cfg, const Setup& s) {
  r.kind = cfg.kind;
  r.metadata = {{"kind", std::string(to_string(cfg.kind))},
                {"distribution", s.dist.spec()},
                {"transform", s.t.to_string()},
                {"space", s.dist.space().describe()},
                {"replications", std::to_string(cfg.replications)},
                {"base_seed", std::to_string(cfg.base_seed)},
                {"solver", std::string(to_string(cfg.solver.method))},
                {"chi", format_double(s.chi)},
                {"chi_provenance", s.chi_estimated ? "plugin:" + std::to_string(cfg.plugin_draws) : "analytic"}};
}

SolverConfig solver_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  SolverConfig sc = cfg.solver;
  sc.shuffle_seed = mix_seed({cfg.solver.shuffle_seed, seed});
  return sc;
}

ExtReal sigma_power(const Setup& s, double a, const ExperimentConfig& cfg, MomentSet& ms) {
  if (ms.has_power(a)) return ms.power(a);
  if (const auto* law = s.dist.radial_law()) {
    const ExtReal v = law->moment(a);
    ms.set_power(a, v, Provenance::Analytic);
    return v;
  }
  const double v = plugin_expectation(s.dist, [a](double d) { return std::pow(d, a); }, cfg.plugin_draws,
                                      mix_seed({cfg.base_seed, 0x6d6f6dULL}));
  ms.set_power(a, v, Provenance::Plugin, cfg.plugin_draws);
  return v;
}

void moment_metadata(ExperimentResult& r, const MomentSet& ms) {
  for (const auto& [tag, e] : ms.entries()) {
    std::string prov(to_string(e.provenance));
    if (e.provenance == Provenance::Plugin) prov += ":" + std::to_string(e.sample_size);
    r.metadata.emplace_back(tag, e.value.to_string() + " (" + prov + ")");
  }
}

struct Cell {
  std::size_t n;
  std::size_t rep;
};

std::vector<Cell> cells(const ExperimentConfig& cfg) {
  std::vector<Cell> out;
  for (auto n : cfg.n_grid)
    for (std::size_t r = 0; r < cfg.replications; ++r) out.push_back({n, r});
  return out;
}

void aggregate_by_n(ExperimentResult& res, const ExperimentConfig& cfg) {
  std::size_t k = 0;
  for (auto n : cfg.n_grid) {
    std::vector<double> losses;
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < cfg.replications; ++r, ++k) {
      losses.push_back(res.records[k].loss);
      bound = res.records[k].bound;
    }
    const auto ms = mean_se(losses);
    AggregateRow row{static_cast<double>(n), ms.mean, ms.se, bound, true};
    row.pass = !(ms.mean > bound + 3.0 * ms.se);
    res.aggregates.push_back(row);
  }
}

bool slope_ok(const ExperimentConfig& cfg, double slope) {
  if (!cfg.slope_window) return true;
  return slope >= cfg.slope_window->first && slope <= cfg.slope_window->second;
}

void finish_slope(ExperimentResult& res, const ExperimentConfig& cfg, const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() >= 2 && std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.second > 0.0; })) {
    res.slope = fit_log_slope(pts);
    res.metadata.emplace_back("slope", format_double(res.slope));
  }
  if (cfg.slope_window) {
    const bool ok = std::isfinite(res.slope) && slope_ok(cfg, res.slope);
    res.metadata.emplace_back("slope_window",
                              format_double(cfg.slope_window->first) + ":" + format_double(cfg.slope_window->second));
    if (!ok) {
      res.pass = false;
      res.notes.push_back("fitted slope outside the accepted window");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- rate

ExperimentResult run_rate(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  const auto cls = s.t.classify();
  if (cls == Robustness::BoundedSlopeFlatTail) {
    throw ConfigError("rate experiments need a tail-robust, contamination-robust or median transform");
  }
  ExperimentResult res;
  common_metadata(res, cfg, s);

  std::function<double(double)> loss;
  std::string loss_name;
  if (s.t.is_power()) {
    const double a = s.t.parameter();
    const double chi = s.loss_chi();
    loss = [a, chi](double d) { return power_loss(a, chi, d); };
    loss_name = "min(chi^(alpha-2) d^2, d^alpha)";
  } else if (cls == Robustness::Median) {
    loss = median_loss;
    loss_name = "min(d, d^2)";
  } else {
    const auto t = s.t;
    const double chi = s.loss_chi();
    loss = [t, chi](double d) { return general_loss(t, chi, d); };
    loss_name = "d^2 min(tau''(2 chi), tau''(2 d))";
  }
  res.metadata.emplace_back("loss", loss_name);

  MomentSet ms;
  std::vector<double> bounds;
  for (auto n : cfg.n_grid) {
    const double nn = static_cast<double>(n);
    ExtReal b = ExtReal::infinity();
    if (s.t.is_power() && s.t.parameter() == 1.5) {
      b = threehalfs_bound(sigma_power(s, 0.5, cfg, ms), sigma_power(s, 1.0, cfg, ms), sigma_power(s, 1.5, cfg, ms), nn);
    } else if (s.t.is_power()) {
      for (double a : power_rate_moment_exponents(s.t.parameter())) sigma_power(s, a, cfg, ms);
      b = power_rate_constant(s.t.parameter(), ms, nn);
    } else if (cls == Robustness::TailRobust) {
      const auto gm = general_rate_moments(s.dist, s.t, nn, 2.0, cfg.plugin_draws, cfg.plugin_outer,
                                           mix_seed({cfg.base_seed, 0x67656eULL, n}));
      b = general_rate_terms(s.t, gm, nn, 2.0).bound;
      if (n == cfg.n_grid.front()) {
        for (const auto& [tag, e] : gm.entries()) ms.set(tag + "@n=" + std::to_string(n), e.value, e.provenance, e.sample_size);
      }
    }
    bounds.push_back(b.to_double());
  }
  moment_metadata(res, ms);

  const auto cs = cells(cfg);
  res.records.resize(cs.size());
  parallel_for(cs.size(), cfg.threads, [&](std::size_t k) {
    const auto [n, r] = cs[k];
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, r);
    const auto sample = s.dist.sample(n, seed);
    const auto est = estimate(s.dist.space(), s.t, sample, solver_for(cfg, seed));
    const double d = s.dist.space().distance(s.m, est.point);
    const auto ni = static_cast<std::size_t>(std::find(cfg.n_grid.begin(), cfg.n_grid.end(), n) - cfg.n_grid.begin());
    res.records[k] = {n, r, seed, d, loss(d), bounds[ni], est.converged ? 1.0 : 0.0,
                      static_cast<double>(est.epochs_used)};
  });
  aggregate_by_n(res, cfg);
  std::vector<std::pair<double, double>> pts;
  for (const auto& a : res.aggregates) {
    pts.emplace_back(a.n, a.mean_loss);
    res.pass = res.pass && a.pass;
  }
  finish_slope(res, cfg, pts);
  return res;
}

// ---------------------------------------------------------------- tail

ExperimentResult run_tail(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  const auto cls = s.t.classify();
  if (cls == Robustness::TailRobust) throw ConfigError("tail bounds need a transform with bounded slope");
  const bool median = cls == Robustness::Median;

  double r = cfg.tail_r;
  const auto* law = s.dist.radial_law();
  if (!(r > 0.0)) {
    if (!(cfg.tail_prob > 0.0)) throw ConfigError("tail experiment needs tail_r or tail_prob");
    if (!law) throw ConfigError("tail_prob needs a distribution with a known radial law");
    r = law->exceedance_radius(cfg.tail_prob);
  }
  double outside;
  std::string prov = "analytic";
  if (law) {
    outside = law->exceedance(r);
  } else {
    outside = plugin_expectation(s.dist, [r](double d) { return d > r ? 1.0 : 0.0; }, cfg.plugin_draws,
                                 mix_seed({cfg.base_seed, 0x7461696cULL}));
    prov = "plugin:" + std::to_string(cfg.plugin_draws);
  }
  const double rho = 1.0 - outside;

  // Corollary constants: (lambda, eta, rho_min) = (9/10, 3/4, 8/9) -> 6,
  // median (eta, rho_min) = (2/3, 9/10) -> 29/5.
  const double cor_eta = median ? 2.0 / 3.0 : 0.75;
  const double cor_rho_min = median ? 0.9 : 8.0 / 9.0;
  const double cor_mult =
      cfg.tail_corollary_multiplier > 0.0 ? cfg.tail_corollary_multiplier : (median ? 29.0 / 5.0 : 6.0);
  if (rho < cor_rho_min) {
    throw InapplicableError("tail mass condition violated: P(d(Y,m) <= r) = " + format_double(rho) + " < " +
                            format_double(cor_rho_min));
  }
  if (!median && !tail_radius_condition(s.t, 0.9, r)) {
    throw InapplicableError("tail radius condition violated: r is below R/2 with tau(R) >= 0.9 D R");
  }
  const double thm_eta = median ? 2.0 / 3.0 : cfg.tail_eta;
  if (!median && !tail_radius_condition(s.t, cfg.tail_lambda, r)) {
    throw InapplicableError("tail radius condition violated for the configured lambda");
  }

  ExperimentResult res;
  common_metadata(res, cfg, s);
  res.metadata.emplace_back("r", format_double(r));
  res.metadata.emplace_back("rho", format_double(rho) + " (" + prov + ")");
  res.metadata.emplace_back("corollary_multiplier", format_double(cor_mult));

  std::vector<TailBound> cor, thm;
  for (auto n : cfg.n_grid) {
    const double nn = static_cast<double>(n);
    if (median) {
      cor.push_back(median_tail_bound(cor_eta, rho, r, nn));
      thm.push_back(median_tail_bound(thm_eta, rho, r, nn));
    } else {
      cor.push_back(tail_bound(0.9, cor_eta, rho, r, nn));
      thm.push_back(tail_bound(cfg.tail_lambda, thm_eta, rho, r, nn));
    }
  }
  res.metadata.emplace_back("theorem_multiplier", format_double(thm.front().radius_multiplier));

  const auto cs = cells(cfg);
  res.records.resize(cs.size());
  parallel_for(cs.size(), cfg.threads, [&](std::size_t k) {
    const auto [n, rep] = cs[k];
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, rep);
    const auto sample = s.dist.sample(n, seed);
    const auto est = estimate(s.dist.space(), s.t, sample, solver_for(cfg, seed));
    const double d = s.dist.space().distance(s.m, est.point);
    const auto ni = static_cast<std::size_t>(std::find(cfg.n_grid.begin(), cfg.n_grid.end(), n) - cfg.n_grid.begin());
    res.records[k] = {n, rep, seed, d, d > cor_mult * r ? 1.0 : 0.0, cor[ni].probability_bound,
                      d > thm[ni].radius_multiplier * r ? 1.0 : 0.0, thm[ni].probability_bound};
  });

  std::size_t k = 0;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    double hits = 0.0;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep, ++k) hits += res.records[k].loss;
    const double reps = static_cast<double>(cfg.replications);
    const double freq = hits / reps;
    const double p = std::min(1.0, cor[ni].probability_bound);
    const double se = std::sqrt(p * (1.0 - p) / reps);
    AggregateRow row{static_cast<double>(cfg.n_grid[ni]), freq, se, cor[ni].probability_bound, true};
    row.pass = !(freq > cor[ni].probability_bound + 3.0 * se);
    res.pass = res.pass && row.pass;
    res.aggregates.push_back(row);
  }
  return res;
}

// ---------------------------------------------------------------- breakdown

namespace {

constexpr double kLambdaGridLo = 0.70;
constexpr double kLambdaGridHi = 0.99;

/// Smallest cap sqrt(max(x0^2, R^2 - delta^2)) + radius over the lambda grid.
double breakdown_cap(const Transform& t, double rho, double clean_radius) {
  const double delta = 2.0 * clean_radius;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 29; ++i) {
    const double lambda = kLambdaGridLo + 0.01 * i;
    if (lambda > kLambdaGridHi + 1e-12) break;
    if (!(rho > 1.0 / (1.0 + lambda))) continue;
    const double R = std::max(minimal_linear_radius(t, lambda), 1e-300);
    best = std::min(best, std::sqrt(deterministic_location_bound(rho, delta, lambda, R)) + clean_radius);
  }
  return best;
}

}  // namespace

ExperimentResult run_breakdown(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  const auto& space = s.dist.space();
  if (!space.as_euclidean()) throw ConfigError("breakdown experiments run in Euclidean space");
  const bool bounded = s.t.slope_sup().is_finite();
  const auto* law = s.dist.radial_law();
  const double clean_radius = law ? law->sup().to_double() : std::numeric_limits<double>::infinity();
  if (bounded && !std::isfinite(clean_radius)) {
    throw ConfigError("the deterministic cap needs a clean law with bounded support");
  }
  const std::size_t n = cfg.n_grid.front();
  std::vector<double> radii = cfg.radii;
  std::sort(radii.begin(), radii.end());

  ExperimentResult res;
  common_metadata(res, cfg, s);
  res.metadata.emplace_back("n", std::to_string(n));
  res.metadata.emplace_back("epsilon", format_double(cfg.epsilon));
  res.metadata.emplace_back("grid", "contaminant radius in the aggregate n column");
  res.metadata.emplace_back("arm", bounded ? "bounded-slope cap" : "divergence");

  const std::size_t nr = radii.size();
  res.records.resize(cfg.replications * nr);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, rep);
    const auto clean = s.dist.sample(n, seed);
    const auto cseed = mix_seed({seed, 3});
    for (std::size_t j = 0; j < nr; ++j) {
      Vector c = std::get<Vector>(s.m);
      c(0) += radii[j];
      const auto sample = cfg.epsilon > 0.0 ? contaminate(clean, cfg.epsilon, Point(c), cseed) : clean;
      std::size_t inside = 0;
      for (const auto& y : sample) inside += space.distance(y, s.m) <= clean_radius ? 1 : 0;
      const double rho = static_cast<double>(inside) / static_cast<double>(n);
      const auto est = estimate(space, s.t, sample, solver_for(cfg, seed));
      const double d = space.distance(s.m, est.point);
      const double cap = bounded ? breakdown_cap(s.t, rho, clean_radius) : std::numeric_limits<double>::infinity();
      res.records[rep * nr + j] = {n, rep, seed, d, d, cap, radii[j], rho};
    }
  });

  // Divergence: displacement nondecreasing along the radius grid in every
  // replication, and the last over the first above growth_factor.
  double min_growth = std::numeric_limits<double>::infinity();
  std::size_t non_monotone = 0;
  for (std::size_t rep = 0; rep < cfg.replications && nr >= 2; ++rep) {
    const double first = res.records[rep * nr].dist, last = res.records[rep * nr + nr - 1].dist;
    min_growth = std::min(min_growth, first > 0.0 ? last / first : std::numeric_limits<double>::infinity());
    for (std::size_t j = 1; j < nr; ++j)
      if (res.records[rep * nr + j].dist < res.records[rep * nr + j - 1].dist) {
        ++non_monotone;
        break;
      }
  }
  for (std::size_t j = 0; j < nr; ++j) {
    std::vector<double> disp;
    double cap = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      const auto& rec = res.records[rep * nr + j];
      disp.push_back(rec.dist);
      cap = std::min(cap, rec.bound);
      if (bounded && !(rec.dist <= rec.bound)) ok = false;
    }
    if (!bounded && j + 1 == nr && nr >= 2) ok = non_monotone == 0 && min_growth > cfg.growth_factor;
    const auto m = mean_se(disp);
    res.aggregates.push_back({radii[j], m.mean, m.se, cap, ok});
    res.pass = res.pass && ok;
  }
  if (nr >= 2) {
    res.metadata.emplace_back("min_growth", format_double(min_growth));
    res.metadata.emplace_back("non_monotone_replications", std::to_string(non_monotone));
  }
  return res;
}

// ---------------------------------------------------------------- fast rate

ExperimentResult run_fast_rate(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  if (!s.t.is_power()) throw ConfigError("fast-rate experiments need a power transform");
  const double alpha = s.t.parameter();
  if (!(cfg.beta >= alpha && cfg.beta <= 2.0)) throw ConfigError("beta must lie in [alpha, 2]");
  const auto* law = s.dist.radial_law();
  if (!law || law->kind() != RadialKind::PowerCDF) throw ConfigError("fast-rate experiments need a powercdf law");
  if (std::abs(law->first() - (cfg.beta - alpha)) > 1e-9) {
    throw ConfigError("powercdf exponent must equal beta - alpha");
  }
  ExperimentResult res;
  common_metadata(res, cfg, s);
  res.metadata.emplace_back("beta", format_double(cfg.beta));
  res.metadata.emplace_back("loss", "min(d^beta, d^alpha)");
  const double beta = cfg.beta;

  const auto cs = cells(cfg);
  res.records.resize(cs.size());
  parallel_for(cs.size(), cfg.threads, [&](std::size_t k) {
    const auto [n, r] = cs[k];
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, r);
    const auto sample = s.dist.sample(n, seed);
    const auto est = estimate(s.dist.space(), s.t, sample, solver_for(cfg, seed));
    const double d = s.dist.space().distance(s.m, est.point);
    res.records[k] = {n, r, seed, d, std::min(std::pow(d, beta), std::pow(d, alpha)),
                      std::numeric_limits<double>::infinity(), est.converged ? 1.0 : 0.0,
                      static_cast<double>(est.epochs_used)};
  });
  aggregate_by_n(res, cfg);
  std::size_t k = 0;
  for (auto n : cfg.n_grid) {
    NeumaierSum sum;
    for (std::size_t r = 0; r < cfg.replications; ++r, ++k) sum.add(res.records[k].dist);
    res.mean_dist.emplace_back(static_cast<double>(n), sum.value() / static_cast<double>(cfg.replications));
  }
  finish_slope(res, cfg, res.mean_dist);
  return res;
}

// ---------------------------------------------------------------- median rate

namespace {

/// sup over candidate knots p in the ball B(m, chi) of the fraction of draws
/// in B(m, p, w). Far knots are excluded: their bow ties swallow any law.
double bowtie_mass(const DistributionSpec& dist, const Point& m, double chi, double w, std::size_t draws,
                   std::uint64_t seed) {
  const auto& s = dist.space();
  const auto ys = dist.sample(draws, seed);
  std::vector<Point> knots;
  const double scale = chi > 0.0 ? chi : 1.0;
  for (double radius : {0.1 * scale, 0.5 * scale, scale}) {
    for (std::uint64_t j = 0; j < 16; ++j) knots.push_back(random_step(s, m, radius, seed, j));
    for (std::size_t j = 0; j < std::min<std::size_t>(16, ys.size()); ++j) {
      const double d = s.distance(m, ys[j]);
      if (d > 0.0) knots.push_back(s.geodesic_point(m, ys[j], std::min(1.0, radius / d)));
    }
  }
  double worst = 0.0;
  for (const auto& p : knots) {
    if (s.distance(m, p) == 0.0) continue;
    std::size_t inside = 0;
    for (const auto& y : ys) inside += bowtie_contains(s, m, p, w, y) ? 1 : 0;
    worst = std::max(worst, static_cast<double>(inside) / static_cast<double>(ys.size()));
  }
  return worst;
}

}  // namespace

ExperimentResult run_median_rate(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  if (s.t.classify() != Robustness::Median) throw ConfigError("median-rate experiments need the identity transform");
  const double mass = bowtie_mass(s.dist, s.m, s.chi, cfg.bowtie_w, cfg.bowtie_draws,
                                  mix_seed({cfg.base_seed, 0x626f77ULL}));
  if (mass >= 0.99) {
    throw InapplicableError("distribution is concentrated on a bow tie (estimated mass " + format_double(mass) + ")");
  }
  ExperimentResult res;
  common_metadata(res, cfg, s);
  res.metadata.emplace_back("bowtie_w", format_double(cfg.bowtie_w));
  res.metadata.emplace_back("bowtie_mass", format_double(mass));
  res.metadata.emplace_back("loss", "min(d, d^2)");

  const auto cs = cells(cfg);
  res.records.resize(cs.size());
  parallel_for(cs.size(), cfg.threads, [&](std::size_t k) {
    const auto [n, r] = cs[k];
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, r);
    const auto sample = s.dist.sample(n, seed);
    const auto est = estimate(s.dist.space(), s.t, sample, solver_for(cfg, seed));
    const double d = s.dist.space().distance(s.m, est.point);
    res.records[k] = {n, r, seed, d, median_loss(d), std::numeric_limits<double>::infinity(),
                      est.converged ? 1.0 : 0.0, static_cast<double>(est.epochs_used)};
  });
  aggregate_by_n(res, cfg);
  std::vector<std::pair<double, double>> pts;
  double max_nrisk = 0.0;
  for (const auto& a : res.aggregates) {
    pts.emplace_back(a.n, a.mean_loss);
    max_nrisk = std::max(max_nrisk, a.n * a.mean_loss);
  }
  res.metadata.emplace_back("max_n_times_risk", format_double(max_nrisk));
  finish_slope(res, cfg, pts);
  return res;
}

// ---------------------------------------------------------------- stability

ExperimentResult run_stability_diagnostic(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  const auto& space = s.dist.space();
  const auto& t = s.t;
  if (cfg.n_grid.back() > 256) throw ConfigError("stability diagnostics are limited to n <= 256");

  double sigma_dtau;
  std::string prov = "analytic";
  const auto* law = s.dist.radial_law();
  if (law && t.is_power()) {
    sigma_dtau = t.parameter() * law->moment(t.parameter() - 1.0).value();
  } else {
    sigma_dtau = plugin_expectation(s.dist, [&](double d) { return t.dtau(d); }, cfg.plugin_draws,
                                    mix_seed({cfg.base_seed, 0x736967ULL}));
    prov = "plugin:" + std::to_string(cfg.plugin_draws);
  }

  ExperimentResult res;
  common_metadata(res, cfg, s);
  res.metadata.emplace_back("sigma_dtau", format_double(sigma_dtau) + " (" + prov + ")");
  res.metadata.emplace_back("n_test", std::to_string(cfg.n_test));
  res.metadata.emplace_back("aux1", "V_n realization");
  res.metadata.emplace_back("aux2", "worst per-i ratio d(m_n,m_n^i) H_i / ((4/n) tau'(d(Y_i,Y_i')))");

  const double chi = s.loss_chi();
  auto loss = [&](double d) {
    if (t.is_power()) return power_loss(t.parameter(), chi, d);
    if (t.classify() == Robustness::Median) return median_loss(d);
    return general_loss(t, chi, d);
  };

  const auto cs = cells(cfg);
  res.records.resize(cs.size());
  std::vector<double> loc_ratio(cs.size());
  std::vector<char> per_i_ok(cs.size());
  parallel_for(cs.size(), cfg.threads, [&](std::size_t k) {
    const auto [n, r] = cs[k];
    const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, r);
    const auto sample = s.dist.sample(n, seed);
    const auto fresh = s.dist.sample(n, mix_seed({seed, 1}));
    const auto sc = solver_for(cfg, seed);
    const auto est = estimate(space, t, sample, sc);
    const auto reps = replace_one_estimates(space, t, sample, fresh, sc);
    const Point& mn = est.point;
    const double nn = static_cast<double>(n);

    // Population excess E[tau(d(Y, m_n)) - tau(d(Y, m))] on a test sample.
    const auto test_seed = mix_seed({seed, 2});
    NeumaierSum pop;
    for (std::size_t j = 0; j < cfg.n_test; ++j) {
      const Point y = s.dist.draw(test_seed, j);
      pop.add(t.tau(space.distance(y, mn)) - t.tau(space.distance(y, s.m)));
    }
    NeumaierSum emp;
    for (const auto& y : sample) emp.add(t.tau(space.distance(y, s.m)) - t.tau(space.distance(y, mn)));
    const double v_n = pop.value() / static_cast<double>(cfg.n_test) + emp.value() / nn;

    NeumaierSum rhs;
    double worst = 0.0;
    bool ok33 = true;
    std::vector<double> d_mn(n);
    for (std::size_t j = 0; j < n; ++j) d_mn[j] = space.distance(sample[j], mn);
    for (std::size_t i = 0; i < n; ++i) {
      const double shift = space.distance(mn, reps[i].point);
      const double slope = t.dtau(space.distance(sample[i], fresh[i]));
      rhs.add(shift * slope);
      if (shift == 0.0) continue;
      NeumaierSum h;
      for (std::size_t j = 0; j < n; ++j) {
        const Point& yj_i = j == i ? fresh[i] : sample[j];
        h.add(t.ddtau_plus(d_mn[j] + shift) + t.ddtau_plus(space.distance(yj_i, reps[i].point) + shift));
      }
      const double lhs = shift * h.value() / nn;
      const double bound = 4.0 / nn * slope;
      worst = std::max(worst, bound > 0.0 ? lhs / bound : std::numeric_limits<double>::infinity());
      if (lhs > 1.1 * bound + 1e-8) ok33 = false;
    }
    NeumaierSum hat;
    for (const auto& y : sample) hat.add(t.dtau(space.distance(y, s.m)));
    const double d = space.distance(s.m, mn);
    loc_ratio[k] = t.dtau(d) / (8.0 * sigma_dtau + 4.0 * hat.value() / nn);
    per_i_ok[k] = ok33;
    res.records[k] = {n, r, seed, d, loss(d), rhs.value() / nn, v_n, worst};
  });

  std::size_t k = 0;
  for (auto n : cfg.n_grid) {
    std::vector<double> v, b;
    bool ok = true;
    double worst51 = 0.0;
    for (std::size_t r = 0; r < cfg.replications; ++r, ++k) {
      v.push_back(res.records[k].aux1);
      b.push_back(res.records[k].bound);
      ok = ok && per_i_ok[k] && loc_ratio[k] <= 1.1;
      worst51 = std::max(worst51, loc_ratio[k]);
    }
    const auto mv = mean_se(v);
    const auto mb = mean_se(b);
    const bool ok32 = !(mv.mean > 1.1 * mb.mean + 3.0 * mv.se);
    res.aggregates.push_back({static_cast<double>(n), mv.mean, mv.se, mb.mean, ok && ok32});
    res.metadata.emplace_back("dtau_location_worst_ratio@n=" + std::to_string(n), format_double(worst51));
    res.pass = res.pass && ok && ok32;
  }
  return res;
}

// ---------------------------------------------------------------- checks

ExperimentResult run_checks(const ExperimentConfig& cfg) {
  cfg.validate();
  const Space space = cfg.space.empty() ? DistributionSpec::parse(cfg.distribution).space() : Space::parse(cfg.space);
  const auto t = Transform::parse(cfg.transform);
  ExperimentResult res;
  res.kind = cfg.kind;
  res.metadata = {{"kind", "checks"}, {"space", space.describe()}, {"transform", t.to_string()},
                  {"trials", std::to_string(cfg.check_trials)}, {"base_seed", std::to_string(cfg.base_seed)}};
  std::vector<CheckReport> reports = {
      check_quadruple(space, t, cfg.check_trials, cfg.base_seed),
      check_midpoint(space, cfg.check_trials, cfg.base_seed),
      check_metric_axioms(space, cfg.check_trials, cfg.base_seed),
      check_geodesics(space, cfg.check_trials, cfg.base_seed),
      check_transform(t, cfg.check_trials, cfg.base_seed),
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    res.records.push_back({rep.trials, i, cfg.base_seed, rep.worst, static_cast<double>(rep.failures), 0.0, 0.0, 0.0});
    res.aggregates.push_back({static_cast<double>(rep.trials), static_cast<double>(rep.failures), 0.0, 0.0, rep.pass});
    res.notes.push_back(rep.name + (rep.pass ? " pass" : " FAIL"));
    res.pass = res.pass && rep.pass;
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Rate: return run_rate(cfg);
    case ExperimentKind::Tail: return run_tail(cfg);
    case ExperimentKind::Breakdown: return run_breakdown(cfg);
    case ExperimentKind::MedianRate: return run_median_rate(cfg);
    case ExperimentKind::FastRate: return run_fast_rate(cfg);
    case ExperimentKind::Stability: return run_stability_diagnostic(cfg);
    case ExperimentKind::Checks: return run_checks(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

// ---------------------------------------------------------------- output

namespace {

void write_metadata(std::ostream& out, const ExperimentResult& r) {
  for (const auto& [k, v] : r.metadata) out << "# " << k << '=' << v << '\n';
}

std::string signed_num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return format_double(x);
}

}  // namespace

void write_records_csv(std::ostream& out, const ExperimentResult& r) {
  write_metadata(out, r);
  out << "n,rep,seed,dist,loss,bound,aux1,aux2\n";
  for (const auto& x : r.records) {
    out << x.n << ',' << x.rep << ',' << x.seed << ',' << signed_num(x.dist) << ',' << signed_num(x.loss) << ','
        << signed_num(x.bound) << ',' << signed_num(x.aux1) << ',' << signed_num(x.aux2) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const ExperimentResult& r) {
  write_metadata(out, r);
  out << "n,mean_loss,stderr,bound,pass\n";
  for (const auto& a : r.aggregates) {
    out << signed_num(a.n) << ',' << signed_num(a.mean_loss) << ',' << signed_num(a.stderr_) << ','
        << signed_num(a.bound) << ',' << (a.pass ? 1 : 0) << '\n';
  }
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& r) {
  if (cfg.output.empty()) return;
  std::ofstream rec(cfg.output);
  if (!rec) throw ConfigError("cannot write '" + cfg.output + "'");
  write_records_csv(rec, r);
  std::string agg = cfg.output;
  const auto dot = agg.rfind('.');
  const auto slash = agg.rfind('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) agg.erase(dot);
  agg += "_aggregate.csv";
  std::ofstream ag(agg);
  if (!ag) throw ConfigError("cannot write '" + agg + "'");
  write_aggregate_csv(ag, r);
}

}  // namespace tfm
