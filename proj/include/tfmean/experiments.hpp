#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tfmean/estimators.hpp"

namespace tfm {

enum class ExperimentKind { Rate, Tail, Breakdown, MedianRate, FastRate, Stability, Checks };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

/// One experiment. JSON keys are the field names below; `solver` is an
/// object with the SolverConfig field names (method as a string).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Rate;
  std::string distribution;
  std::string transform;
  /// Must agree with the distribution's space when given.
  std::string space;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  std::uint64_t base_seed = 0;
  SolverConfig solver;
  std::string output;  ///< record CSV path; aggregates go to <stem>_aggregate.csv
  std::size_t threads = 0;  ///< 0 = hardware concurrency

  /// Accepted window for the fitted log-log slope (rate, fast, median).
  std::optional<std::pair<double, double>> slope_window;

  // tail
  double tail_r = 0.0;     ///< radius r; 0 = derive from tail_prob
  double tail_prob = 0.0;  ///< P(d(Y, m) > r) used when tail_r = 0
  double tail_lambda = 0.9;
  double tail_eta = 0.75;   ///< 2/3 is substituted for the identity transform
  double tail_corollary_multiplier = 0.0;  ///< 0 = 6 (bounded slope) or 29/5 (median)

  // breakdown
  double epsilon = 0.4;
  std::vector<double> radii;
  double growth_factor = 1e3;

  // fast rate
  double beta = 2.0;

  // median rate
  double bowtie_w = 0.1;
  std::size_t bowtie_draws = 4000;

  // stability
  std::size_t n_test = 100000;

  /// Draws for plug-in population moments.
  std::size_t plugin_draws = 1000000;
  /// Outer resamples for E[h(2 hat sigma)^p] in the explicit general rate.
  std::size_t plugin_outer = 200;

  // checks
  std::size_t check_trials = 100000;

  /// Throws ConfigError for an empty or non-increasing n_grid, zero
  /// replications or a malformed spec string.
  void validate() const;

  static ExperimentConfig from_json_text(std::string_view text);
  static ExperimentConfig load(const std::string& path);
  std::string to_json_text() const;
  /// Sets one field from its textual value, keyed like the JSON fields.
  void set(std::string_view key, std::string_view value);
};

struct ExperimentRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double dist = 0.0;
  double loss = 0.0;
  double bound = std::numeric_limits<double>::infinity();
  double aux1 = 0.0;
  double aux2 = 0.0;
};

struct AggregateRow {
  double n = 0.0;  ///< sample size, or contaminant radius for breakdown
  double mean_loss = 0.0;
  double stderr_ = 0.0;
  double bound = std::numeric_limits<double>::infinity();
  bool pass = true;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::Rate;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<ExperimentRecord> records;
  std::vector<AggregateRow> aggregates;
  /// Fitted slope of log(mean loss) (rate, median) or log(mean distance)
  /// (fast) against log n; NaN when not applicable.
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// (n, mean distance) for the fast-rate fit.
  std::vector<std::pair<double, double>> mean_dist;
  bool pass = true;
  std::vector<std::string> notes;
};

/// Derived seed of replication r at sample size n.
std::uint64_t replication_seed(std::uint64_t base, ExperimentKind kind, std::uint64_t n, std::uint64_t r);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = all
/// hardware threads). Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

/// OLS slope of log(value) on log(n). Needs >= 2 points, positive values.
double fit_log_slope(const std::vector<std::pair<double, double>>& points);

ExperimentResult run_rate(const ExperimentConfig& cfg);
ExperimentResult run_tail(const ExperimentConfig& cfg);
ExperimentResult run_breakdown(const ExperimentConfig& cfg);
ExperimentResult run_fast_rate(const ExperimentConfig& cfg);
ExperimentResult run_stability_diagnostic(const ExperimentConfig& cfg);
ExperimentResult run_median_rate(const ExperimentConfig& cfg);
ExperimentResult run_checks(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// `# key=value` metadata lines, then `n,rep,seed,dist,loss,bound,aux1,aux2`.
void write_records_csv(std::ostream& out, const ExperimentResult& r);
/// `# key=value` metadata lines, then `n,mean_loss,stderr,bound,pass`.
void write_aggregate_csv(std::ostream& out, const ExperimentResult& r);
/// Writes both files for cfg.output (no-op when empty).
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& r);

}  // namespace tfm
