#include "npw/estimators.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "npw/error.hpp"

namespace npw {

namespace {

struct ArmScores {
  std::vector<double> pos;
  std::vector<double> neg;
};

// arm: 0 control, 1 treated, -1 pooled.
ArmScores collect(const RctDataset& dataset, const ScoreSet& scores, int arm) {
  ArmScores out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (arm >= 0 && dataset.treatment[i] != arm) continue;
    (dataset.outcome[i] == 1 ? out.pos : out.neg).push_back(scores.scores[i]);
  }
  return out;
}

double arm_auc(const RctDataset& dataset, const ScoreSet& scores, int arm, Tie tie) {
  const char* name = arm == 0 ? "control arm" : arm == 1 ? "treated arm" : "pooled data";
  auto s = collect(dataset, scores, arm);
  if (s.pos.empty()) throw DegenerateError(std::string(name) + " has no positive outcomes");
  if (s.neg.empty()) throw DegenerateError(std::string(name) + " has no negative outcomes");
  return auc(s.pos, s.neg, tie);
}

AucEstimate make_estimate(Method method, double value, const RctDataset& dataset) {
  AucEstimate e;
  e.method = method;
  e.value = value;
  e.n_treated = static_cast<std::size_t>(
      std::count(dataset.treatment.begin(), dataset.treatment.end(), 1));
  e.n_control = dataset.size() - e.n_treated;
  return e;
}

void check_inputs(const RctDataset& dataset, const ScoreSet& scores) {
  if (dataset.treatment.size() != dataset.size()) {
    throw DataError("dataset outcome/treatment length mismatch");
  }
  check_scores(dataset, scores);
}

// Treated-arm view of the nuisance vectors, in treated index order.
struct TreatedView {
  std::vector<double> scores;
  std::vector<int> outcome;
  std::vector<double> omega;
  std::vector<double> tau;
};

TreatedView treated_view(const RctDataset& dataset, const ScoreSet& scores,
                         const NuisanceEstimates& nuisance) {
  const auto treated = split_by_treatment(dataset).treated;
  const std::size_t expected =
      nuisance.coverage == NuisanceCoverage::full ? dataset.size() : treated.size();
  if (nuisance.omega_hat.size() != expected || nuisance.tau_hat.size() != expected) {
    throw std::invalid_argument("nuisance estimates do not match the dataset");
  }
  TreatedView v;
  for (std::size_t k = 0; k < treated.size(); ++k) {
    const auto i = treated[k];
    const auto src = nuisance.coverage == NuisanceCoverage::full ? i : k;
    v.scores.push_back(scores.scores[i]);
    v.outcome.push_back(dataset.outcome[i]);
    v.omega.push_back(nuisance.omega_hat[src]);
    v.tau.push_back(nuisance.tau_hat[src]);
  }
  return v;
}

}  // namespace

std::string_view to_string(Combine combine) {
  switch (combine) {
    case Combine::average: return "average";
    case Combine::omega_only: return "omega_only";
    case Combine::tau_only: return "tau_only";
  }
  return "unknown";
}

Combine parse_combine(std::string_view name) {
  for (auto c : {Combine::average, Combine::omega_only, Combine::tau_only}) {
    if (to_string(c) == name) return c;
  }
  throw UsageError("unknown combine mode '" + std::string(name) + "'");
}

AucEstimate auc_standard(const RctDataset& dataset, const ScoreSet& scores, Tie tie) {
  check_inputs(dataset, scores);
  return make_estimate(Method::standard, arm_auc(dataset, scores, 0, tie), dataset);
}

AucEstimate auc_treated(const RctDataset& dataset, const ScoreSet& scores, Tie tie) {
  check_inputs(dataset, scores);
  return make_estimate(Method::treated, arm_auc(dataset, scores, 1, tie), dataset);
}

AucEstimate auc_naive(const RctDataset& dataset, const ScoreSet& scores, Tie tie) {
  check_inputs(dataset, scores);
  const double pi = dataset.randomization_prob;
  double value = 0.0;
  auto e = make_estimate(Method::naive, 0.0, dataset);
  if (pi < 1.0) {
    const double control = arm_auc(dataset, scores, 0, tie);
    e.diagnostics["control_auc"] = control;
    value += (1.0 - pi) * control;
  }
  if (pi > 0.0) {
    const double treated = arm_auc(dataset, scores, 1, tie);
    e.diagnostics["treated_auc"] = treated;
    value += pi * treated;
  }
  e.value = value;
  return e;
}

AucEstimate auc_all(const RctDataset& dataset, const ScoreSet& scores, Tie tie) {
  check_inputs(dataset, scores);
  return make_estimate(Method::all_data, arm_auc(dataset, scores, -1, tie), dataset);
}

AucEstimate auc_npw_omega(const RctDataset& dataset, const ScoreSet& scores,
                          const NuisanceEstimates& nuisance, Tie tie) {
  check_inputs(dataset, scores);
  const auto v = treated_view(dataset, scores, nuisance);
  if (v.scores.size() < 2) throw DegenerateError("omega path needs at least two treated samples");
  std::vector<double> neg_weights(v.omega.size());
  std::transform(v.omega.begin(), v.omega.end(), neg_weights.begin(),
                 [](double w) { return 1.0 - w; });
  const double value = weighted_auc(v.scores, v.omega, v.scores, neg_weights, tie, true);
  return make_estimate(Method::npw_omega_only, value, dataset);
}

AucEstimate auc_npw_tau(const RctDataset& dataset, const ScoreSet& scores,
                        const NuisanceEstimates& nuisance, Tie tie, bool clip) {
  check_inputs(dataset, scores);
  const auto v = treated_view(dataset, scores, nuisance);
  const double treated_auc = arm_auc(dataset, scores, 1, tie);

  const double mu1 = nuisance.mu1_hat;
  const double mu0 = nuisance.mu0_hat;
  const double tau_bar = nuisance.tau_bar_hat;
  const double baseline = mu0 * (1.0 - mu0);
  if (!(baseline >= kProbEpsilon * kProbEpsilon)) {
    throw DegenerateError("tau path: degenerate baseline rate");
  }

  const auto cdf = empirical_cdf(v.scores, v.scores, tie);
  double tau_cdf = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) tau_cdf += v.tau[k] * cdf[k];
  tau_cdf /= static_cast<double>(cdf.size());

  double value =
      (mu1 * (1.0 - mu1) * treated_auc + (mu1 - 0.5 * tau_bar) * tau_bar - tau_cdf) / baseline;
  if (clip) value = std::clamp(value, 0.0, 1.0);

  auto e = make_estimate(Method::npw_tau_only, value, dataset);
  e.diagnostics["treated_auc"] = treated_auc;
  e.diagnostics["mean_tau_cdf"] = tau_cdf;
  e.diagnostics["mu1_hat"] = mu1;
  e.diagnostics["mu0_hat"] = mu0;
  e.diagnostics["tau_bar_hat"] = tau_bar;
  return e;
}

AucEstimate auc_npw(const RctDataset& dataset, const ScoreSet& scores,
                    const NuisanceEstimates& nuisance, const NpwConfig& config) {
  check_inputs(dataset, scores);
  const double pi = dataset.randomization_prob;
  auto e = make_estimate(Method::npw, 0.0, dataset);
  double value = 0.0;
  if (pi < 1.0) {
    const double control = arm_auc(dataset, scores, 0, config.tie);
    e.diagnostics["control_auc"] = control;
    value += (1.0 - pi) * control;
  }
  if (pi > 0.0) {
    double alt = 0.0;
    if (config.combine != Combine::tau_only) {
      const double omega_path = auc_npw_omega(dataset, scores, nuisance, config.tie).value;
      e.diagnostics["omega_path"] = omega_path;
      alt += config.combine == Combine::average ? 0.5 * omega_path : omega_path;
    }
    if (config.combine != Combine::omega_only) {
      const auto tau = auc_npw_tau(dataset, scores, nuisance, config.tie, config.clip_tau_path);
      e.diagnostics["tau_path"] = tau.value;
      alt += config.combine == Combine::average ? 0.5 * tau.value : tau.value;
    }
    e.diagnostics["alternative"] = alt;
    value += pi * alt;
  }
  e.diagnostics["mu1_hat"] = nuisance.mu1_hat;
  e.diagnostics["mu0_hat"] = nuisance.mu0_hat;
  e.diagnostics["tau_bar_hat"] = nuisance.tau_bar_hat;
  e.value = value;
  return e;
}

AucEstimate estimate(Method method, const RctDataset& dataset, const ScoreSet& scores,
                     const NuisanceEstimates* nuisance, const NpwConfig& config) {
  if (needs_nuisance(method) && nuisance == nullptr) {
    throw DataError(std::string(to_string(method)) + " requires nuisance estimates");
  }
  switch (method) {
    case Method::standard: return auc_standard(dataset, scores, config.tie);
    case Method::treated: return auc_treated(dataset, scores, config.tie);
    case Method::naive: return auc_naive(dataset, scores, config.tie);
    case Method::all_data: return auc_all(dataset, scores, config.tie);
    case Method::npw: return auc_npw(dataset, scores, *nuisance, config);
    case Method::npw_omega_only: {
      NpwConfig c = config;
      c.combine = Combine::omega_only;
      auto e = auc_npw(dataset, scores, *nuisance, c);
      e.method = Method::npw_omega_only;
      return e;
    }
    case Method::npw_tau_only: {
      NpwConfig c = config;
      c.combine = Combine::tau_only;
      auto e = auc_npw(dataset, scores, *nuisance, c);
      e.method = Method::npw_tau_only;
      return e;
    }
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace npw
