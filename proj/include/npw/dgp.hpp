#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npw/metrics.hpp"
#include "npw/nuisance.hpp"
#include "npw/random.hpp"
#include "npw/types.hpp"

namespace npw {

// Shape of the CATE numerator: printed uses (1 - w_y.x), sigmoid uses
// (1 - sigmoid(w_y.x)).
enum class TauForm { printed, sigmoid };
std::string_view to_string(TauForm form);
TauForm parse_tau_form(std::string_view name);

// Ground-truth labels: y0 over the whole pool, y0 of the pool samples
// assigned to control only, or the expected labels (every pool sample
// weighted by omega as a positive and 1 - omega as a negative).
enum class TruthConvention { whole_pool, control_half, expected };
std::string_view to_string(TruthConvention convention);
TruthConvention parse_truth_convention(std::string_view name);

struct DgpConfig {
  std::size_t dim = 20;
  std::size_t pool_size = 100000;
  double delta = 0.0;  // average treatment effect
  double pi = 0.5;
  double w_y_density = 0.4;
  std::vector<double> w_tau_support{0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> w_tau_probs{0.8, 0.05, 0.05, 0.05, 0.05};
  double prob_clip = kProbEpsilon;
  std::uint64_t seed = 0;
  TauForm tau_form = TauForm::printed;
  TruthConvention truth = TruthConvention::whole_pool;

  // Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct DgpWeights {
  std::vector<double> w_y;
  std::vector<double> w_tau;
};

DgpWeights gen_weights(const DgpConfig& config, Rng& rng);

struct SyntheticPool {
  Matrix features;
  std::vector<double> baseline_logit;  // w_y.x
  std::vector<double> omega_true;      // clipped sigmoid(w_y.x)
  std::vector<double> tau_true;        // normalized CATE, mean exactly delta
  std::vector<double> p1;              // clipped omega + tau
  std::vector<double> tau_effective;   // p1 - omega_true
  std::vector<int> y0;
  std::vector<int> y1;
  std::vector<int> pool_treatment;  // arm used by the control_half convention
  DgpWeights weights;
  double clipped_fraction = 0.0;  // share of samples whose omega + tau was clipped
  TruthConvention truth = TruthConvention::whole_pool;

  std::size_t size() const noexcept { return y0.size(); }
};

// One draw. Throws DegenerateError("degenerate tau normalizer") when the CATE
// normalizer is within 1e-9 of zero.
SyntheticPool gen_pool(const DgpConfig& config, Rng& rng);

// Seeds from config.seed and re-draws (on a derived stream) until the
// normalizer is usable.
SyntheticPool gen_pool(const DgpConfig& config);

// AUC of the scores against y0 under the pool's truth convention.
double true_auc(const SyntheticPool& pool, std::span<const double> scores, Tie tie = Tie::strict);

struct RctSample {
  RctDataset dataset;
  std::vector<std::size_t> pool_index;
};

// n pool samples without replacement, arms ~ Bernoulli(pi), observed outcome
// taken from the matching potential outcome.
RctSample subsample_rct(const SyntheticPool& pool, std::size_t n, double pi, Rng& rng);

// Replaces the observed outcomes with fresh draws from omega (control) or p1
// (treated) of the sampled rows.
void redraw_outcomes(const SyntheticPool& pool, RctSample& sample, Rng& rng);

struct SpectrumModel {
  ScoreSet score_set;  // scores over the whole pool
  double true_auc = 0.0;
  std::size_t training_size = 0;
  bool flagged = false;  // learner did not converge or saw one class
};

std::vector<std::size_t> default_training_sizes();

// One logistic model per training size, fit on a fresh y0-labelled subsample
// and scored on the pool by its linear predictor. Sorted by true AUC; a model
// whose true AUC duplicates an earlier one is re-drawn.
std::vector<SpectrumModel> gen_model_spectrum(const SyntheticPool& pool,
                                              std::span<const std::size_t> training_sizes,
                                              Rng& rng, const LearnerConfig& learner = {},
                                              Tie tie = Tie::strict);

// baseline_logit + scale * noise, a degraded Bayes scorer.
ScoreSet noisy_bayes_scores(const SyntheticPool& pool, std::span<const double> noise,
                            double scale, std::string name);

// Scale for noisy_bayes_scores whose true AUC is closest to target (bisection).
double calibrate_noise_scale(const SyntheticPool& pool, std::span<const double> noise,
                             double target_auc, Tie tie = Tie::strict);

// Whole pool as a dataset; treatment from
// pool_treatment and outcome from the matching potential outcome.
RctDataset pool_as_dataset(const SyntheticPool& pool, double pi);

}  // namespace npw
