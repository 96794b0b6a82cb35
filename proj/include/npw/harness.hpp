#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "npw/dgp.hpp"
#include "npw/estimators.hpp"
#include "npw/nuisance.hpp"
#include "npw/theory.hpp"
#include "npw/types.hpp"

namespace npw {

enum class NuisanceMode { oracle_noisy, cross_fit };
std::string_view to_string(NuisanceMode mode);
NuisanceMode parse_nuisance_mode(std::string_view name);

// pool: observed outcomes are the pool's potential outcomes.
// redraw: every replicate draws fresh outcomes from the true probabilities
// of the sampled rows, so replicate means target the expected-label truth.
enum class OutcomeMode { pool, redraw };
std::string_view to_string(OutcomeMode mode);
OutcomeMode parse_outcome_mode(std::string_view name);

inline LearnerConfig default_spectrum_learner() { return {1.0, 2000, 1.0, 1e-7}; }

struct SweepConfig {
  DgpConfig dgp;
  std::size_t n_rct = 200;
  std::size_t replications = 100;
  std::vector<double> ate_grid{0.2};
  std::vector<double> noise_grid{0.01};
  NuisanceMode nuisance_mode = NuisanceMode::oracle_noisy;
  std::vector<Method> estimator_set{Method::standard, Method::naive, Method::npw};
  Tie tie = Tie::strict;
  std::uint64_t base_seed = 0;
  OutcomeMode outcome_mode = OutcomeMode::pool;
  std::vector<std::size_t> training_sizes = default_training_sizes();
  LearnerConfig spectrum_learner = default_spectrum_learner();
  std::size_t folds = 5;
  LearnerConfig nuisance_learner;
  std::size_t ci_draws = 1000;
  double ci_level = 0.95;
  unsigned threads = 0;  // 0: hardware concurrency

  // Throws std::invalid_argument.
  void validate() const;
};

struct PowerConfig {
  std::vector<std::size_t> n_grid{200, 400, 800};
  std::size_t bootstrap_samples = 1000;
  std::size_t repetitions = 100;
  double significance = 0.05;
  std::uint64_t base_seed = 0;
  bool stratified = false;  // resample within arms
  std::vector<Method> methods{Method::standard, Method::naive, Method::npw};
  NpwConfig npw;
  unsigned threads = 0;

  void validate() const;
};

using Labels = std::vector<std::pair<std::string, std::string>>;

// "k1=v1;k2=v2".
std::string format_labels(const Labels& labels);
Labels parse_labels(std::string_view text);

struct ReportRow {
  Labels setting;
  std::string method;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;

  // False when every replicate was degenerate; the statistics are NaN then.
  bool available() const noexcept { return used > 0; }
  friend bool operator==(const ReportRow&, const ReportRow&);
};

struct ExperimentReport {
  std::string metric;
  std::map<std::string, std::string> provenance;
  std::vector<ReportRow> rows;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

// Percentile bootstrap of the mean (type-7 quantiles). The interval is
// widened if needed so that it contains the sample mean.
std::pair<double, double> bootstrap_ci(std::span<const double> values, double level,
                                       std::size_t draws, Rng& rng);

// Mean, CI and counts for one row. NaN statistics when values is empty.
ReportRow summarize(Labels setting, std::string method, std::span<const double> values,
                    std::size_t skipped, double level, std::size_t draws, std::uint64_t seed);

// Resolved configuration as flat key/value pairs (same keys as run configs).
std::map<std::string, std::string> provenance_of(const SweepConfig& config);
std::map<std::string, std::string> provenance_of(const PowerConfig& config);

// One synthetic pool and its model spectrum.
struct SweepWorld {
  SyntheticPool pool;
  std::vector<SpectrumModel> models;
};
SweepWorld make_world(const SweepConfig& config, double ate);

// Draws replicate r: subsample plus outcome mode. Row r of the sweep uses
// seed base_seed + r.
RctSample draw_replicate(const SweepConfig& config, const SyntheticPool& pool, std::size_t r);

// Nuisance estimates for one replicate. noise_index selects the oracle
// variance; ignored under cross-fitting.
NuisanceEstimates replicate_nuisance(const SweepConfig& config, const SyntheticPool& pool,
                                     const RctSample& sample, std::size_t r,
                                     std::size_t noise_index);

ExperimentReport run_mae_sweep(const SweepConfig& config);
ExperimentReport run_cindex_sweep(const SweepConfig& config);

struct BiasCheckRow {
  Method method = Method::naive;
  double truth = 0.0;
  double mean_error = 0.0;       // mean of (estimate - truth)
  double standard_error = 0.0;   // Monte Carlo SE of mean_error
  double predicted_error = 0.0;  // NaN when no prediction applies
  std::size_t used = 0;
  std::size_t skipped = 0;

  double gap() const noexcept { return mean_error - predicted_error; }
};

struct BiasCheckResult {
  BiasDiagnostics theory;
  double mu0 = 0.0;
  double mu1 = 0.0;
  // Population AUCs ranking arm-a positives against arm-b negatives.
  double auc_00 = 0.0;
  double auc_11 = 0.0;
  double auc_01 = 0.0;
  double auc_10 = 0.0;
  // Expected pooled AUC with the pooled class composition as mixture weights.
  double composition_mixture = 0.0;
  std::vector<BiasCheckRow> rows;
};

// Replicates of config.n_rct on the given pool with oracle nuisances (first
// entry of noise_grid). Predicted errors: naive -> -(alpha delta - beta
// sigma); treated -> auc_11 - truth; all_data -> pi-weighted mixture - truth;
// standard and npw variants -> 0.
BiasCheckResult run_bias_check(const SweepConfig& config, const SyntheticPool& pool,
                               const ScoreSet& model, std::span<const Method> methods);

ExperimentReport bias_report(const BiasCheckResult& result, const SweepConfig& config);

struct PowerSample {
  RctDataset dataset;
  ScoreSet scores_a;
  ScoreSet scores_b;
  std::optional<NuisanceEstimates> nuisance;
};

// Draws n rows for one repetition.
using PowerSource = std::function<PowerSample(std::size_t n, Rng& rng)>;

// n pool rows without replacement, arms ~ Bernoulli(pi), oracle nuisances
// with the given noise variance.
PowerSource synthetic_power_source(const SyntheticPool& pool, ScoreSet scores_a,
                                   ScoreSet scores_b, double pi, double oracle_variance,
                                   OutcomeMode outcome_mode = OutcomeMode::pool);

// n trial rows without replacement. Nuisances come from the supplied
// estimates when present, else from cross-fitting each drawn sample.
PowerSource dataset_power_source(RctDataset dataset, ScoreSet scores_a, ScoreSet scores_b,
                                 std::optional<NuisanceEstimates> nuisance,
                                 CrossFitConfig cross_fit);

struct PowerResult {
  PowerConfig config;
  // p_values[method][n_index][repetition]; NaN marks an invalid repetition.
  std::vector<std::vector<std::vector<double>>> p_values;

  double power_at(std::size_t method_index, std::size_t n_index, double alpha) const;
  std::size_t valid_repetitions(std::size_t method_index, std::size_t n_index) const;
  // Smallest grid n whose power reaches target, if any.
  std::optional<std::size_t> n_reaching(std::size_t method_index, double target,
                                        double alpha) const;
};

// Two noisy Bayes scorers over the pool with independent noise vectors (drawn
// from derive_seed(seed, 7)), calibrated to the target true AUCs.
std::pair<ScoreSet, ScoreSet> make_score_pair(const SyntheticPool& pool, double auc_a,
                                              double auc_b, std::uint64_t seed,
                                              Tie tie = Tie::strict);

// p = share of valid bootstrap draws with AUC(scores_a) >= AUC(scores_b).
PowerResult run_power(const PowerSource& source, const PowerConfig& config);

ExperimentReport power_report(const PowerResult& result, std::uint64_t ci_seed = 0);

}  // namespace npw
