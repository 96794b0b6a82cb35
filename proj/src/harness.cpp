#include "npw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "npw/error.hpp"
#include "npw/metrics.hpp"
#include "npw/parallel.hpp"
#include "npw/theory.hpp"

namespace npw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kSpectrumStream = 1;

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::string join_numbers(std::span<const double> values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += format_number(values[k]);
  }
  return out;
}

std::string join_counts(std::span<const std::size_t> values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(values[k]);
  }
  return out;
}

std::string join_methods(std::span<const Method> methods) {
  std::string out;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    if (k) out += ',';
    out += to_string(methods[k]);
  }
  return out;
}

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

// Type-7 quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> index) {
  std::vector<double> out;
  out.reserve(index.size());
  for (auto i : index) out.push_back(values[i]);
  return out;
}

// Estimates for every method; NaN where the estimate is degenerate.
std::vector<double> estimate_all(std::span<const Method> methods, const RctDataset& dataset,
                                 const ScoreSet& scores, const NuisanceEstimates& nuisance,
                                 const NpwConfig& config) {
  std::vector<double> out(methods.size(), kNaN);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    try {
      out[m] = estimate(methods[m], dataset, scores, &nuisance, config).value;
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

std::vector<double> finite_only(std::span<const double> values, std::size_t& skipped) {
  std::vector<double> out;
  skipped = 0;
  for (double v : values) {
    if (std::isnan(v)) {
      ++skipped;
    } else {
      out.push_back(v);
    }
  }
  return out;
}

NpwConfig npw_config(const SweepConfig& config) {
  NpwConfig npw;
  npw.tie = config.tie;
  npw.epsilon = config.dgp.prob_clip;
  return npw;
}

struct NoiseSetting {
  double variance;
  std::string label;
};

std::vector<NoiseSetting> noise_settings(const SweepConfig& config) {
  if (config.nuisance_mode == NuisanceMode::cross_fit) return {{kNaN, "cross_fit"}};
  std::vector<NoiseSetting> out;
  for (double v : config.noise_grid) out.push_back({v, format_number(v)});
  return out;
}

}  // namespace

std::string_view to_string(NuisanceMode mode) {
  return mode == NuisanceMode::oracle_noisy ? "oracle_noisy" : "cross_fit";
}

NuisanceMode parse_nuisance_mode(std::string_view name) {
  if (name == "oracle_noisy") return NuisanceMode::oracle_noisy;
  if (name == "cross_fit") return NuisanceMode::cross_fit;
  throw UsageError("unknown nuisance mode: " + std::string(name));
}

std::string_view to_string(OutcomeMode mode) { return mode == OutcomeMode::pool ? "pool" : "redraw"; }

OutcomeMode parse_outcome_mode(std::string_view name) {
  if (name == "pool") return OutcomeMode::pool;
  if (name == "redraw") return OutcomeMode::redraw;
  throw UsageError("unknown outcome mode: " + std::string(name));
}

void SweepConfig::validate() const {
  dgp.validate();
  if (replications < 1) throw std::invalid_argument("sweep: replications must be >= 1");
  if (ate_grid.empty()) throw std::invalid_argument("sweep: ate_grid is empty");
  if (nuisance_mode == NuisanceMode::oracle_noisy && noise_grid.empty()) {
    throw std::invalid_argument("sweep: noise_grid is empty");
  }
  for (double v : noise_grid) {
    if (!(v >= 0.0)) throw std::invalid_argument("sweep: noise variance must be >= 0");
  }
  for (double a : ate_grid) {
    if (!(a >= -1.0 && a <= 1.0)) throw std::invalid_argument("sweep: ATE outside [-1,1]");
  }
  if (estimator_set.empty()) throw std::invalid_argument("sweep: no estimators");
  if (n_rct < 2 || n_rct > dgp.pool_size) throw std::invalid_argument("sweep: n_rct outside [2, pool_size]");
  if (training_sizes.empty()) throw std::invalid_argument("sweep: no training sizes");
  if (folds < 2) throw std::invalid_argument("sweep: folds must be >= 2");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("sweep: ci_level outside (0,1)");
}

void PowerConfig::validate() const {
  if (n_grid.empty()) throw std::invalid_argument("power: n_grid is empty");
  if (bootstrap_samples < 100) throw std::invalid_argument("power: bootstrap_samples must be >= 100");
  if (repetitions < 1) throw std::invalid_argument("power: repetitions must be >= 1");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw std::invalid_argument("power: significance outside (0,1)");
  }
  if (methods.empty()) throw std::invalid_argument("power: no methods");
}

std::string format_labels(const Labels& labels) {
  std::string out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k) out += ';';
    out += labels[k].first + '=' + labels[k].second;
  }
  return out;
}

Labels parse_labels(std::string_view text) {
  Labels out;
  while (!text.empty()) {
    const auto end = text.find(';');
    const auto item = text.substr(0, end);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw DataError("malformed setting label: " + std::string(item));
    out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
  return out;
}

bool operator==(const ReportRow& a, const ReportRow& b) {
  return a.setting == b.setting && a.method == b.method && same_number(a.mean, b.mean) &&
         same_number(a.ci_lo, b.ci_lo) && same_number(a.ci_hi, b.ci_hi) && a.used == b.used &&
         a.skipped == b.skipped;
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, double level,
                                       std::size_t draws, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("bootstrap_ci: no values");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level outside (0,1)");
  const double mean = mean_of(values);
  if (values.size() == 1 || draws == 0) return {mean, mean};

  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(draws);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += values[pick(rng)];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  const double lo = quantile_sorted(means, tail);
  const double hi = quantile_sorted(means, 1.0 - tail);
  return {std::min(lo, mean), std::max(hi, mean)};
}

ReportRow summarize(Labels setting, std::string method, std::span<const double> values,
                    std::size_t skipped, double level, std::size_t draws, std::uint64_t seed) {
  ReportRow row{std::move(setting), std::move(method), kNaN, kNaN, kNaN, values.size(), skipped};
  if (values.empty()) return row;
  Rng rng(seed);
  row.mean = mean_of(values);
  std::tie(row.ci_lo, row.ci_hi) = bootstrap_ci(values, level, draws, rng);
  return row;
}

std::map<std::string, std::string> provenance_of(const SweepConfig& c) {
  std::map<std::string, std::string> p;
  p["dim"] = std::to_string(c.dgp.dim);
  p["pool_size"] = std::to_string(c.dgp.pool_size);
  p["delta"] = format_number(c.dgp.delta);
  p["pi"] = format_number(c.dgp.pi);
  p["w_y_density"] = format_number(c.dgp.w_y_density);
  p["w_tau_support"] = join_numbers(c.dgp.w_tau_support);
  p["w_tau_probs"] = join_numbers(c.dgp.w_tau_probs);
  p["prob_clip"] = format_number(c.dgp.prob_clip);
  p["dgp_seed"] = std::to_string(c.dgp.seed);
  p["tau_form"] = to_string(c.dgp.tau_form);
  p["truth"] = to_string(c.dgp.truth);
  p["n_rct"] = std::to_string(c.n_rct);
  p["replications"] = std::to_string(c.replications);
  p["ate_grid"] = join_numbers(c.ate_grid);
  p["noise_grid"] = join_numbers(c.noise_grid);
  p["nuisance_mode"] = to_string(c.nuisance_mode);
  p["estimators"] = join_methods(c.estimator_set);
  p["tie"] = to_string(c.tie);
  p["base_seed"] = std::to_string(c.base_seed);
  p["outcome_mode"] = to_string(c.outcome_mode);
  p["training_sizes"] = join_counts(c.training_sizes);
  p["spectrum_l2_penalty"] = format_number(c.spectrum_learner.l2_penalty);
  p["spectrum_max_iterations"] = std::to_string(c.spectrum_learner.max_iterations);
  p["spectrum_step_size"] = format_number(c.spectrum_learner.step_size);
  p["spectrum_convergence_tol"] = format_number(c.spectrum_learner.convergence_tol);
  p["folds"] = std::to_string(c.folds);
  p["l2_penalty"] = format_number(c.nuisance_learner.l2_penalty);
  p["max_iterations"] = std::to_string(c.nuisance_learner.max_iterations);
  p["step_size"] = format_number(c.nuisance_learner.step_size);
  p["convergence_tol"] = format_number(c.nuisance_learner.convergence_tol);
  p["ci_draws"] = std::to_string(c.ci_draws);
  p["ci_level"] = format_number(c.ci_level);
  p["protocol_deviation"] = "logistic regression substitutes the tree learner";
  return p;
}

std::map<std::string, std::string> provenance_of(const PowerConfig& c) {
  std::map<std::string, std::string> p;
  p["n_grid"] = join_counts(c.n_grid);
  p["bootstrap_samples"] = std::to_string(c.bootstrap_samples);
  p["repetitions"] = std::to_string(c.repetitions);
  p["significance"] = format_number(c.significance);
  p["base_seed"] = std::to_string(c.base_seed);
  p["stratified"] = c.stratified ? "true" : "false";
  p["estimators"] = join_methods(c.methods);
  p["tie"] = to_string(c.npw.tie);
  p["combine"] = to_string(c.npw.combine);
  p["clip_tau_path"] = c.npw.clip_tau_path ? "true" : "false";
  p["epsilon"] = format_number(c.npw.epsilon);
  return p;
}

SweepWorld make_world(const SweepConfig& config, double ate) {
  DgpConfig dgp = config.dgp;
  dgp.delta = ate;
  SweepWorld world{gen_pool(dgp), {}};
  Rng rng(derive_seed(dgp.seed, kSpectrumStream));
  world.models = gen_model_spectrum(world.pool, config.training_sizes, rng,
                                    config.spectrum_learner, config.tie);
  return world;
}

RctSample draw_replicate(const SweepConfig& config, const SyntheticPool& pool, std::size_t r) {
  Rng rng(config.base_seed + r);
  auto sample = subsample_rct(pool, config.n_rct, config.dgp.pi, rng);
  if (config.outcome_mode == OutcomeMode::redraw) redraw_outcomes(pool, sample, rng);
  return sample;
}

NuisanceEstimates replicate_nuisance(const SweepConfig& config, const SyntheticPool& pool,
                                     const RctSample& sample, std::size_t r,
                                     std::size_t noise_index) {
  const std::uint64_t seed = config.base_seed + r;
  if (config.nuisance_mode == NuisanceMode::cross_fit) {
    CrossFitConfig cf{config.folds, config.nuisance_learner, derive_seed(seed, 0)};
    return cross_fit_nuisance(sample.dataset, cf).nuisance;
  }
  Rng rng(derive_seed(seed, noise_index + 1));
  const auto omega = gather(pool.omega_true, sample.pool_index);
  const auto tau = gather(pool.tau_effective, sample.pool_index);
  return noisy_oracle(sample.dataset, omega, tau, config.noise_grid.at(noise_index), rng,
                      config.dgp.prob_clip);
}

ExperimentReport run_mae_sweep(const SweepConfig& config) {
  config.validate();
  const auto noise = noise_settings(config);
  const auto& methods = config.estimator_set;
  const NpwConfig npw = npw_config(config);

  ExperimentReport report{"mae", provenance_of(config), {}};
  std::uint64_t row_seed = 0;
  for (double ate : config.ate_grid) {
    const auto world = make_world(config, ate);
    const std::size_t n_models = world.models.size();
    // errors[(v * n_models + model) * n_methods + method][r]
    std::vector<std::vector<double>> errors(noise.size() * n_models * methods.size(),
                                            std::vector<double>(config.replications, kNaN));
    parallel_for(
        config.replications,
        [&](std::size_t r) {
          const auto sample = draw_replicate(config, world.pool, r);
          for (std::size_t v = 0; v < noise.size(); ++v) {
            NuisanceEstimates nuisance;
            try {
              nuisance = replicate_nuisance(config, world.pool, sample, r, v);
            } catch (const DataError&) {
              continue;  // arm too small to cross-fit: every estimate skipped
            }
            for (std::size_t k = 0; k < n_models; ++k) {
              const auto& model = world.models[k];
              const auto scores = take_scores(model.score_set, sample.pool_index);
              const auto est = estimate_all(methods, sample.dataset, scores, nuisance, npw);
              for (std::size_t m = 0; m < methods.size(); ++m) {
                errors[(v * n_models + k) * methods.size() + m][r] = std::abs(est[m] - model.true_auc);
              }
            }
          }
        },
        config.threads);

    for (std::size_t v = 0; v < noise.size(); ++v) {
      for (std::size_t k = 0; k < n_models; ++k) {
        const auto& model = world.models[k];
        for (std::size_t m = 0; m < methods.size(); ++m) {
          std::size_t skipped = 0;
          const auto used = finite_only(errors[(v * n_models + k) * methods.size() + m], skipped);
          Labels labels{{"ate", format_number(ate)},
                        {"v", noise[v].label},
                        {"model", model.score_set.model_name},
                        {"true_auc", format_number(model.true_auc)},
                        {"training_size", std::to_string(model.training_size)}};
          if (model.flagged) labels.emplace_back("flagged", "true");
          report.rows.push_back(summarize(std::move(labels), std::string(to_string(methods[m])), used,
                                          skipped, config.ci_level, config.ci_draws,
                                          derive_seed(config.base_seed, ++row_seed)));
        }
      }
    }
  }
  return report;
}

ExperimentReport run_cindex_sweep(const SweepConfig& config) {
  config.validate();
  const auto noise = noise_settings(config);
  const auto& methods = config.estimator_set;
  const NpwConfig npw = npw_config(config);

  ExperimentReport report{"c_index", provenance_of(config), {}};
  std::uint64_t row_seed = 0;
  for (double ate : config.ate_grid) {
    const auto world = make_world(config, ate);
    const std::size_t n_models = world.models.size();
    if (n_models < 5) throw std::invalid_argument("c-index sweep needs at least 5 models");
    std::vector<double> truths;
    for (const auto& m : world.models) truths.push_back(m.true_auc);

    // cindex[v * n_methods + method][r]
    std::vector<std::vector<double>> cindex(noise.size() * methods.size(),
                                            std::vector<double>(config.replications, kNaN));
    parallel_for(
        config.replications,
        [&](std::size_t r) {
          const auto sample = draw_replicate(config, world.pool, r);
          for (std::size_t v = 0; v < noise.size(); ++v) {
            NuisanceEstimates nuisance;
            try {
              nuisance = replicate_nuisance(config, world.pool, sample, r, v);
            } catch (const DataError&) {
              continue;
            }
            // est[method][model]
            std::vector<std::vector<double>> est(methods.size(), std::vector<double>(n_models));
            for (std::size_t k = 0; k < n_models; ++k) {
              const auto scores = take_scores(world.models[k].score_set, sample.pool_index);
              const auto values = estimate_all(methods, sample.dataset, scores, nuisance, npw);
              for (std::size_t m = 0; m < methods.size(); ++m) est[m][k] = values[m];
            }
            for (std::size_t m = 0; m < methods.size(); ++m) {
              const bool complete = std::none_of(est[m].begin(), est[m].end(),
                                                 [](double x) { return std::isnan(x); });
              if (complete) cindex[v * methods.size() + m][r] = c_index(est[m], truths);
            }
          }
        },
        config.threads);

    for (std::size_t v = 0; v < noise.size(); ++v) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::size_t skipped = 0;
        const auto used = finite_only(cindex[v * methods.size() + m], skipped);
        Labels labels{{"ate", format_number(ate)}, {"v", noise[v].label}};
        report.rows.push_back(summarize(std::move(labels), std::string(to_string(methods[m])), used,
                                        skipped, config.ci_level, config.ci_draws,
                                        derive_seed(config.base_seed, ++row_seed)));
      }
    }
  }
  return report;
}

BiasCheckResult run_bias_check(const SweepConfig& config, const SyntheticPool& pool,
                               const ScoreSet& model, std::span<const Method> methods) {
  config.validate();
  if (config.nuisance_mode != NuisanceMode::oracle_noisy) {
    throw std::invalid_argument("bias check needs oracle nuisances");
  }
  if (model.scores.size() != pool.size()) throw DataError("bias check: model does not score the pool");
  const double pi = config.dgp.pi;
  const NpwConfig npw = npw_config(config);
  const std::size_t n = pool.size();

  BiasCheckResult result;
  result.mu0 = mean_of(pool.omega_true);
  result.mu1 = mean_of(pool.p1);
  const double truth = true_auc(pool, model.scores, config.tie);
  const auto cdf = empirical_cdf(model.scores, model.scores, Tie::half);
  result.theory = bias_diagnostics(PopulationParams(pi, result.mu0, result.mu1), truth - 0.5,
                                   sigma_f(pool.tau_effective, cdf));

  std::vector<double> neg0(n);
  std::vector<double> neg1(n);
  for (std::size_t i = 0; i < n; ++i) {
    neg0[i] = 1.0 - pool.omega_true[i];
    neg1[i] = 1.0 - pool.p1[i];
  }
  const auto& f = model.scores;
  result.auc_00 = weighted_auc(f, pool.omega_true, f, neg0, config.tie, true);
  result.auc_11 = weighted_auc(f, pool.p1, f, neg1, config.tie, true);
  result.auc_01 = weighted_auc(f, pool.omega_true, f, neg1, config.tie, true);
  result.auc_10 = weighted_auc(f, pool.p1, f, neg0, config.tie, true);
  const double mixture = all_data_mixture(result.auc_00, result.auc_11, result.auc_01, result.auc_10, pi);
  // Share of treated samples among pooled positives and pooled negatives.
  const double q_pos = pi * result.mu1 / ((1.0 - pi) * result.mu0 + pi * result.mu1);
  const double q_neg = pi * (1.0 - result.mu1) / ((1.0 - pi) * (1.0 - result.mu0) + pi * (1.0 - result.mu1));
  result.composition_mixture = (1.0 - q_pos) * (1.0 - q_neg) * result.auc_00 +
                               q_pos * q_neg * result.auc_11 +
                               (1.0 - q_pos) * q_neg * result.auc_01 +
                               q_pos * (1.0 - q_neg) * result.auc_10;

  std::vector<std::vector<double>> errors(methods.size(), std::vector<double>(config.replications, kNaN));
  parallel_for(
      config.replications,
      [&](std::size_t r) {
        const auto sample = draw_replicate(config, pool, r);
        const auto nuisance = replicate_nuisance(config, pool, sample, r, 0);
        const auto scores = take_scores(model, sample.pool_index);
        const auto est = estimate_all(methods, sample.dataset, scores, nuisance, npw);
        for (std::size_t m = 0; m < methods.size(); ++m) errors[m][r] = est[m] - truth;
      },
      config.threads);

  for (std::size_t m = 0; m < methods.size(); ++m) {
    BiasCheckRow row;
    row.method = methods[m];
    row.truth = truth;
    const auto used = finite_only(errors[m], row.skipped);
    row.used = used.size();
    row.mean_error = used.empty() ? kNaN : mean_of(used);
    if (used.size() > 1) {
      double ss = 0.0;
      for (double e : used) ss += (e - row.mean_error) * (e - row.mean_error);
      row.standard_error = std::sqrt(ss / static_cast<double>(used.size() - 1) / static_cast<double>(used.size()));
    } else {
      row.standard_error = kNaN;
    }
    switch (methods[m]) {
      case Method::naive: row.predicted_error = -result.theory.predicted_bias; break;
      case Method::treated: row.predicted_error = result.auc_11 - truth; break;
      case Method::all_data: row.predicted_error = mixture - truth; break;
      default: row.predicted_error = 0.0; break;
    }
    result.rows.push_back(row);
  }
  return result;
}

ExperimentReport bias_report(const BiasCheckResult& result, const SweepConfig& config) {
  ExperimentReport report{"bias_check", provenance_of(config), {}};
  auto& p = report.provenance;
  p["alpha"] = format_number(result.theory.alpha);
  p["beta"] = format_number(result.theory.beta);
  p["delta_f"] = format_number(result.theory.delta_f);
  p["sigma_f"] = format_number(result.theory.sigma_f);
  p["predicted_bias"] = format_number(result.theory.predicted_bias);
  p["mu0"] = format_number(result.mu0);
  p["mu1"] = format_number(result.mu1);
  p["auc_00"] = format_number(result.auc_00);
  p["auc_11"] = format_number(result.auc_11);
  p["auc_01"] = format_number(result.auc_01);
  p["auc_10"] = format_number(result.auc_10);
  p["composition_mixture"] = format_number(result.composition_mixture);
  const auto point = [](Labels labels, std::string method, double value, const BiasCheckRow& row) {
    return ReportRow{std::move(labels), std::move(method), value, value, value, row.used, row.skipped};
  };
  for (const auto& row : result.rows) {
    const std::string method(to_string(row.method));
    const double half = 1.959963984540054 * row.standard_error;
    report.rows.push_back(ReportRow{{{"quantity", "mean_error"}, {"truth", format_number(row.truth)}},
                                    method, row.mean_error, row.mean_error - half,
                                    row.mean_error + half, row.used, row.skipped});
    report.rows.push_back(point({{"quantity", "predicted_error"}}, method, row.predicted_error, row));
    report.rows.push_back(point({{"quantity", "standard_error"}}, method, row.standard_error, row));
    report.rows.push_back(point({{"quantity", "gap"}}, method, row.gap(), row));
  }
  return report;
}

PowerSource synthetic_power_source(const SyntheticPool& pool, ScoreSet scores_a,
                                   ScoreSet scores_b, double pi, double oracle_variance,
                                   OutcomeMode outcome_mode) {
  if (scores_a.scores.size() != pool.size() || scores_b.scores.size() != pool.size()) {
    throw DataError("power: scores do not cover the pool");
  }
  return [&pool, a = std::move(scores_a), b = std::move(scores_b), pi, oracle_variance,
          outcome_mode](std::size_t n, Rng& rng) {
    auto sample = subsample_rct(pool, n, pi, rng);
    if (outcome_mode == OutcomeMode::redraw) redraw_outcomes(pool, sample, rng);
    PowerSample out;
    out.dataset = std::move(sample.dataset);
    out.dataset.features = Matrix(n, 0);
    out.scores_a = take_scores(a, sample.pool_index);
    out.scores_b = take_scores(b, sample.pool_index);
    out.nuisance = noisy_oracle(out.dataset, gather(pool.omega_true, sample.pool_index),
                                gather(pool.tau_effective, sample.pool_index), oracle_variance, rng);
    return out;
  };
}

PowerSource dataset_power_source(RctDataset dataset, ScoreSet scores_a, ScoreSet scores_b,
                                 std::optional<NuisanceEstimates> nuisance,
                                 CrossFitConfig cross_fit) {
  check_scores(dataset, scores_a);
  check_scores(dataset, scores_b);
  if (nuisance && nuisance->coverage != NuisanceCoverage::full) {
    throw DataError("power: nuisance estimates must cover every row");
  }
  return [ds = std::move(dataset), a = std::move(scores_a), b = std::move(scores_b),
          nu = std::move(nuisance), cross_fit](std::size_t n, Rng& rng) {
    if (n > ds.size()) throw DataError("power: n exceeds the number of trial rows");
    auto rows = sample_without_replacement(ds.size(), n, rng);
    std::sort(rows.begin(), rows.end());
    PowerSample out;
    out.dataset = take_rows(ds, rows);
    out.scores_a = take_scores(a, rows);
    out.scores_b = take_scores(b, rows);
    if (nu) {
      out.nuisance = take_nuisance(*nu, out.dataset, rows);
    } else if (ds.features.cols() > 0) {
      CrossFitConfig cf = cross_fit;
      cf.seed = rng();
      try {
        out.nuisance = cross_fit_nuisance(out.dataset, cf).nuisance;
      } catch (const DataError&) {
        out.nuisance.reset();
      }
    }
    out.dataset.features = Matrix(n, 0);
    return out;
  };
}

double PowerResult::power_at(std::size_t method_index, std::size_t n_index, double alpha) const {
  const auto& ps = p_values.at(method_index).at(n_index);
  std::size_t valid = 0;
  std::size_t hits = 0;
  for (double p : ps) {
    if (std::isnan(p)) continue;
    ++valid;
    if (p < alpha) ++hits;
  }
  return valid == 0 ? kNaN : static_cast<double>(hits) / static_cast<double>(valid);
}

std::size_t PowerResult::valid_repetitions(std::size_t method_index, std::size_t n_index) const {
  const auto& ps = p_values.at(method_index).at(n_index);
  return static_cast<std::size_t>(
      std::count_if(ps.begin(), ps.end(), [](double p) { return !std::isnan(p); }));
}

std::optional<std::size_t> PowerResult::n_reaching(std::size_t method_index, double target,
                                                   double alpha) const {
  for (std::size_t k = 0; k < config.n_grid.size(); ++k) {
    const double power = power_at(method_index, k, alpha);
    if (!std::isnan(power) && power >= target) return config.n_grid[k];
  }
  return std::nullopt;
}

PowerResult run_power(const PowerSource& source, const PowerConfig& config) {
  config.validate();
  const auto& methods = config.methods;
  const std::size_t B = config.bootstrap_samples;
  const bool any_nuisance = std::any_of(methods.begin(), methods.end(), needs_nuisance);

  PowerResult result{config, {}};
  result.p_values.assign(methods.size(), std::vector<std::vector<double>>(
                                             config.n_grid.size(),
                                             std::vector<double>(config.repetitions, kNaN)));
  for (std::size_t k = 0; k < config.n_grid.size(); ++k) {
    const std::size_t n = config.n_grid[k];
    parallel_for(
        config.repetitions,
        [&](std::size_t r) {
          Rng rng(derive_seed(config.base_seed + r, k));
          const auto sample = source(n, rng);
          const auto arms = split_by_treatment(sample.dataset);

          std::vector<std::size_t> ge(methods.size(), 0);
          std::vector<std::size_t> valid(methods.size(), 0);
          std::vector<std::size_t> rows(n);
          for (std::size_t b = 0; b < B; ++b) {
            if (config.stratified) {
              std::size_t pos = 0;
              for (const auto* arm : {&arms.control, &arms.treated}) {
                if (arm->empty()) continue;
                std::uniform_int_distribution<std::size_t> pick(0, arm->size() - 1);
                for (std::size_t j = 0; j < arm->size(); ++j) rows[pos++] = (*arm)[pick(rng)];
              }
            } else {
              std::uniform_int_distribution<std::size_t> pick(0, n - 1);
              for (auto& i : rows) i = pick(rng);
            }
            const auto boot = take_rows(sample.dataset, rows);
            const auto a = take_scores(sample.scores_a, rows);
            const auto bs = take_scores(sample.scores_b, rows);
            std::optional<NuisanceEstimates> nu;
            if (any_nuisance && sample.nuisance) nu = take_nuisance(*sample.nuisance, boot, rows);
            for (std::size_t m = 0; m < methods.size(); ++m) {
              if (needs_nuisance(methods[m]) && !nu) continue;
              try {
                const double auc_a = estimate(methods[m], boot, a, nu ? &*nu : nullptr, config.npw).value;
                const double auc_b = estimate(methods[m], boot, bs, nu ? &*nu : nullptr, config.npw).value;
                ++valid[m];
                if (auc_a >= auc_b) ++ge[m];
              } catch (const DegenerateError&) {
              }
            }
          }
          for (std::size_t m = 0; m < methods.size(); ++m) {
            // Invalid when more than half of the draws were degenerate.
            if (2 * valid[m] >= B && valid[m] > 0) {
              result.p_values[m][k][r] = static_cast<double>(ge[m]) / static_cast<double>(valid[m]);
            }
          }
        },
        config.threads);
  }
  return result;
}

ExperimentReport power_report(const PowerResult& result, std::uint64_t ci_seed) {
  const auto& config = result.config;
  ExperimentReport report{"power", provenance_of(config), {}};
  std::uint64_t row_seed = 0;
  for (std::size_t k = 0; k < config.n_grid.size(); ++k) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      std::vector<double> hits;
      std::size_t skipped = 0;
      for (double p : result.p_values[m][k]) {
        if (std::isnan(p)) {
          ++skipped;
        } else {
          hits.push_back(p < config.significance ? 1.0 : 0.0);
        }
      }
      report.rows.push_back(summarize({{"n", std::to_string(config.n_grid[k])},
                                       {"alpha", format_number(config.significance)}},
                                      std::string(to_string(config.methods[m])), hits, skipped, 0.95,
                                      1000, derive_seed(ci_seed, ++row_seed)));
    }
  }
  return report;
}

std::pair<ScoreSet, ScoreSet> make_score_pair(const SyntheticPool& pool, double auc_a,
                                              double auc_b, std::uint64_t seed, Tie tie) {
  Rng rng(derive_seed(seed, 7));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise_a(pool.size());
  std::vector<double> noise_b(pool.size());
  for (auto& v : noise_a) v = normal(rng);
  for (auto& v : noise_b) v = normal(rng);
  const double scale_a = calibrate_noise_scale(pool, noise_a, auc_a, tie);
  const double scale_b = calibrate_noise_scale(pool, noise_b, auc_b, tie);
  return {noisy_bayes_scores(pool, noise_a, scale_a, "model_a"),
          noisy_bayes_scores(pool, noise_b, scale_b, "model_b")};
}

}  // namespace npw
