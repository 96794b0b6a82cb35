#include "npw/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "npw/error.hpp"

namespace npw {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

std::string_view to_string(TauForm form) {
  return form == TauForm::printed ? "printed" : "sigmoid";
}

TauForm parse_tau_form(std::string_view name) {
  if (name == "printed") return TauForm::printed;
  if (name == "sigmoid") return TauForm::sigmoid;
  throw UsageError("unknown tau form: " + std::string(name));
}

std::string_view to_string(TruthConvention convention) {
  switch (convention) {
    case TruthConvention::whole_pool: return "whole_pool";
    case TruthConvention::control_half: return "control_half";
    case TruthConvention::expected: return "expected";
  }
  return "whole_pool";
}

TruthConvention parse_truth_convention(std::string_view name) {
  if (name == "whole_pool") return TruthConvention::whole_pool;
  if (name == "control_half") return TruthConvention::control_half;
  if (name == "expected") return TruthConvention::expected;
  throw UsageError("unknown truth convention: " + std::string(name));
}

void DgpConfig::validate() const {
  if (dim == 0) throw std::invalid_argument("dgp: dim must be positive");
  if (pool_size < 2) throw std::invalid_argument("dgp: pool_size must be at least 2");
  if (!(delta >= -1.0 && delta <= 1.0)) throw std::invalid_argument("dgp: delta outside [-1,1]");
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("dgp: pi outside [0,1]");
  if (!(w_y_density >= 0.0 && w_y_density <= 1.0)) {
    throw std::invalid_argument("dgp: w_y_density outside [0,1]");
  }
  if (w_tau_support.empty() || w_tau_support.size() != w_tau_probs.size()) {
    throw std::invalid_argument("dgp: w_tau support and probabilities differ in length");
  }
  double total = 0.0;
  for (double p : w_tau_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("dgp: negative w_tau probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("dgp: w_tau probabilities do not sum to 1");
  if (!(prob_clip > 0.0 && prob_clip < 0.5)) throw std::invalid_argument("dgp: prob_clip outside (0, 0.5)");
}

DgpWeights gen_weights(const DgpConfig& config, Rng& rng) {
  config.validate();
  DgpWeights w;
  w.w_y.assign(config.dim, 0.0);
  const auto nonzero = static_cast<std::size_t>(
      std::llround(config.w_y_density * static_cast<double>(config.dim)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto pos : sample_without_replacement(config.dim, nonzero, rng)) w.w_y[pos] = normal(rng);

  std::discrete_distribution<std::size_t> pick(config.w_tau_probs.begin(), config.w_tau_probs.end());
  w.w_tau.resize(config.dim);
  for (auto& v : w.w_tau) v = config.w_tau_support[pick(rng)];
  return w;
}

SyntheticPool gen_pool(const DgpConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = config.pool_size;
  const double eps = config.prob_clip;

  SyntheticPool pool;
  pool.truth = config.truth;
  pool.weights = gen_weights(config, rng);
  pool.features = Matrix(n, config.dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : pool.features.row(i)) v = normal(rng);
  }

  pool.baseline_logit.resize(n);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = pool.features.row(i);
    const double z = dot(pool.weights.w_y, x);
    pool.baseline_logit[i] = z;
    const double gate = sigmoid(dot(pool.weights.w_tau, x));
    raw[i] = gate * (config.tau_form == TauForm::printed ? 1.0 - z : 1.0 - sigmoid(z));
  }

  pool.tau_true.assign(n, 0.0);
  if (config.delta != 0.0) {
    const double normalizer = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(n);
    if (std::abs(normalizer) < 1e-9) throw DegenerateError("degenerate tau normalizer");
    for (std::size_t i = 0; i < n; ++i) pool.tau_true[i] = raw[i] * config.delta / normalizer;
  }

  pool.omega_true.resize(n);
  pool.p1.resize(n);
  pool.tau_effective.resize(n);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double omega = sigmoid(pool.baseline_logit[i]);
    const double target = omega + pool.tau_true[i];
    pool.omega_true[i] = clamp_probability(omega, eps);
    pool.p1[i] = clamp_probability(target, eps);
    if (pool.p1[i] != target) ++clipped;
    pool.tau_effective[i] = pool.p1[i] - pool.omega_true[i];
  }
  pool.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(n);

  pool.y0.resize(n);
  pool.y1.resize(n);
  pool.pool_treatment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool.y0[i] = bernoulli(rng, pool.omega_true[i]);
    pool.y1[i] = bernoulli(rng, pool.p1[i]);
    pool.pool_treatment[i] = bernoulli(rng, config.pi);
  }
  return pool;
}

SyntheticPool gen_pool(const DgpConfig& config) {
  constexpr std::uint64_t kMaxAttempts = 100;
  for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(attempt == 0 ? config.seed : derive_seed(config.seed, attempt));
    try {
      return gen_pool(config, rng);
    } catch (const DegenerateError&) {
    }
  }
  throw DegenerateError("degenerate tau normalizer");
}

double true_auc(const SyntheticPool& pool, std::span<const double> scores, Tie tie) {
  if (scores.size() != pool.size()) throw DataError("true_auc: score length does not match pool");
  if (pool.truth == TruthConvention::expected) {
    std::vector<double> neg_weights(pool.size());
    std::transform(pool.omega_true.begin(), pool.omega_true.end(), neg_weights.begin(),
                   [](double w) { return 1.0 - w; });
    return weighted_auc(scores, pool.omega_true, scores, neg_weights, tie, true);
  }
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.truth == TruthConvention::control_half && pool.pool_treatment[i] != 0) continue;
    (pool.y0[i] == 1 ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) throw DegenerateError("true_auc: single-class y0");
  return auc(pos, neg, tie);
}

RctSample subsample_rct(const SyntheticPool& pool, std::size_t n, double pi, Rng& rng) {
  if (n > pool.size()) throw std::invalid_argument("subsample_rct: n exceeds pool size");
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("subsample_rct: pi outside [0,1]");
  RctSample sample;
  sample.pool_index = sample_without_replacement(pool.size(), n, rng);
  auto& ds = sample.dataset;
  ds.features = pool.features.take_rows(sample.pool_index);
  ds.randomization_prob = pi;
  ds.outcome.resize(n);
  ds.treatment.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = sample.pool_index[k];
    ds.treatment[k] = bernoulli(rng, pi);
    ds.outcome[k] = ds.treatment[k] == 1 ? pool.y1[i] : pool.y0[i];
  }
  return sample;
}

void redraw_outcomes(const SyntheticPool& pool, RctSample& sample, Rng& rng) {
  auto& ds = sample.dataset;
  for (std::size_t k = 0; k < sample.pool_index.size(); ++k) {
    const auto i = sample.pool_index[k];
    ds.outcome[k] = bernoulli(rng, ds.treatment[k] == 1 ? pool.p1[i] : pool.omega_true[i]);
  }
}

std::vector<std::size_t> default_training_sizes() {
  return {10, 15, 20, 30, 40, 60, 80, 100, 200, 400, 800, 1500};
}

std::vector<SpectrumModel> gen_model_spectrum(const SyntheticPool& pool,
                                              std::span<const std::size_t> training_sizes,
                                              Rng& rng, const LearnerConfig& learner, Tie tie) {
  constexpr int kMaxRedraws = 20;
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  std::vector<SpectrumModel> models;
  for (auto size : training_sizes) {
    if (size == 0 || size > pool.size()) {
      throw std::invalid_argument("model spectrum: training size outside [1, pool_size]");
    }
    SpectrumModel model;
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      const auto rows = sample_without_replacement(pool.size(), size, rng);
      std::vector<int> labels;
      labels.reserve(size);
      for (auto i : rows) labels.push_back(pool.y0[i]);
      const auto scaler = Standardizer::fit(pool.features, rows);
      const auto fitted = fit_logistic(scaler.apply(pool.features, rows), labels, learner);

      model.training_size = size;
      model.flagged = fitted.degenerate || !fitted.converged;
      model.score_set.model_name = "model_" + std::to_string(models.size());
      model.score_set.scores = predict_linear(fitted, scaler.apply(pool.features, all));
      model.true_auc = true_auc(pool, model.score_set.scores, tie);
      const bool duplicate = std::any_of(models.begin(), models.end(), [&](const SpectrumModel& m) {
        return m.true_auc == model.true_auc;
      });
      if (!duplicate) break;
    }
    models.push_back(std::move(model));
  }
  std::stable_sort(models.begin(), models.end(),
                   [](const SpectrumModel& a, const SpectrumModel& b) { return a.true_auc < b.true_auc; });
  for (std::size_t k = 0; k < models.size(); ++k) {
    models[k].score_set.model_name = "model_" + std::to_string(k);
  }
  return models;
}

ScoreSet noisy_bayes_scores(const SyntheticPool& pool, std::span<const double> noise,
                            double scale, std::string name) {
  if (noise.size() != pool.size()) throw std::invalid_argument("noisy_bayes_scores: length mismatch");
  ScoreSet out{std::move(name), std::vector<double>(pool.size())};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    out.scores[i] = pool.baseline_logit[i] + scale * noise[i];
  }
  return out;
}

double calibrate_noise_scale(const SyntheticPool& pool, std::span<const double> noise,
                             double target_auc, Tie tie) {
  const auto auc_at = [&](double s) { return true_auc(pool, noisy_bayes_scores(pool, noise, s, "").scores, tie); };
  double lo = 0.0;
  double hi = 1.0;
  while (auc_at(hi) > target_auc && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (auc_at(mid) > target_auc ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RctDataset pool_as_dataset(const SyntheticPool& pool, double pi) {
  RctDataset ds;
  ds.features = pool.features;
  ds.randomization_prob = pi;
  ds.treatment = pool.pool_treatment;
  ds.outcome.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ds.outcome[i] = ds.treatment[i] == 1 ? pool.y1[i] : pool.y0[i];
  }
  return ds;
}

}  // namespace npw
