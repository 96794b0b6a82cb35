#include "npw/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "npw/error.hpp"

namespace npw {

double clamp_probability(double p, double epsilon) {
  return std::clamp(p, epsilon, 1.0 - epsilon);
}

std::string format_number(double value) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value || !std::isfinite(value)) break;
  }
  return buf;
}

Matrix Matrix::take_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

ValidationResult validate_dataset(const RctDataset& dataset, bool require_both_arms) {
  ValidationResult result;
  const std::size_t n = dataset.outcome.size();
  if (dataset.treatment.size() != n) {
    result.violations.push_back("length mismatch: outcome has " + std::to_string(n) +
                                " entries, treatment has " +
                                std::to_string(dataset.treatment.size()));
  }
  if (dataset.features.rows() != n) {
    result.violations.push_back("length mismatch: features have " +
                                std::to_string(dataset.features.rows()) + " rows, outcome has " +
                                std::to_string(n) + " entries");
  }
  if (std::any_of(dataset.outcome.begin(), dataset.outcome.end(),
                  [](int v) { return v != 0 && v != 1; })) {
    result.violations.push_back("non-binary outcome");
  }
  if (std::any_of(dataset.treatment.begin(), dataset.treatment.end(),
                  [](int v) { return v != 0 && v != 1; })) {
    result.violations.push_back("non-binary treatment");
  }
  const double pi = dataset.randomization_prob;
  if (!(pi > 0.0 && pi < 1.0)) {
    result.violations.push_back("randomization probability outside (0,1)");
  }
  if (require_both_arms) {
    const auto treated = std::count(dataset.treatment.begin(), dataset.treatment.end(), 1);
    const auto control = std::count(dataset.treatment.begin(), dataset.treatment.end(), 0);
    if (treated == 0) result.violations.push_back("empty treatment arm");
    if (control == 0) result.violations.push_back("empty control arm");
  }
  return result;
}

void require_valid(const RctDataset& dataset, bool require_both_arms) {
  auto result = validate_dataset(dataset, require_both_arms);
  if (result.ok()) return;
  std::string message = "invalid dataset:";
  for (const auto& v : result.violations) message += " " + v + ";";
  throw DataError(message);
}

ArmSplit split_by_treatment(const RctDataset& dataset) {
  ArmSplit split;
  for (std::size_t i = 0; i < dataset.treatment.size(); ++i) {
    (dataset.treatment[i] == 1 ? split.treated : split.control).push_back(i);
  }
  return split;
}

RctDataset take_rows(const RctDataset& dataset, std::span<const std::size_t> indices) {
  RctDataset out;
  out.features = dataset.features.take_rows(indices);
  out.outcome.reserve(indices.size());
  out.treatment.reserve(indices.size());
  for (auto i : indices) {
    out.outcome.push_back(dataset.outcome[i]);
    out.treatment.push_back(dataset.treatment[i]);
  }
  out.randomization_prob = dataset.randomization_prob;
  return out;
}

double empirical_treatment_rate(const RctDataset& dataset) {
  if (dataset.treatment.empty()) return 0.0;
  const auto treated = std::count(dataset.treatment.begin(), dataset.treatment.end(), 1);
  return static_cast<double>(treated) / static_cast<double>(dataset.treatment.size());
}

void check_scores(const RctDataset& dataset, const ScoreSet& scores) {
  if (scores.scores.size() != dataset.size()) {
    throw DataError("score set '" + scores.model_name + "' has " +
                    std::to_string(scores.scores.size()) + " entries, dataset has " +
                    std::to_string(dataset.size()));
  }
  for (double s : scores.scores) {
    if (!std::isfinite(s)) throw DataError("score set '" + scores.model_name + "' has non-finite scores");
  }
}

ScoreSet take_scores(const ScoreSet& scores, std::span<const std::size_t> indices) {
  ScoreSet out{scores.model_name, {}};
  out.scores.reserve(indices.size());
  for (auto i : indices) out.scores.push_back(scores.scores[i]);
  return out;
}

NuisanceEstimates make_nuisance(const RctDataset& dataset, std::vector<double> omega,
                                std::vector<double> tau, NuisanceCoverage coverage,
                                double epsilon) {
  const auto split = split_by_treatment(dataset);
  const std::size_t expected =
      coverage == NuisanceCoverage::full ? dataset.size() : split.treated.size();
  if (omega.size() != expected || tau.size() != expected) {
    throw std::invalid_argument("nuisance vectors do not match the covered sample count");
  }
  for (double& w : omega) {
    if (!std::isfinite(w)) throw DataError("non-finite omega_hat");
    w = clamp_probability(w, epsilon);
  }
  for (double t : tau) {
    if (!std::isfinite(t)) throw DataError("non-finite tau_hat");
  }

  NuisanceEstimates est;
  est.coverage = coverage;
  if (!split.treated.empty()) {
    double y_sum = 0.0;
    double tau_sum = 0.0;
    for (std::size_t k = 0; k < split.treated.size(); ++k) {
      const auto i = split.treated[k];
      y_sum += dataset.outcome[i];
      tau_sum += coverage == NuisanceCoverage::full ? tau[i] : tau[k];
    }
    const auto m = static_cast<double>(split.treated.size());
    est.mu1_hat = y_sum / m;
    est.tau_bar_hat = tau_sum / m;
    est.mu0_hat = clamp_probability(est.mu1_hat - est.tau_bar_hat, epsilon);
  }
  est.omega_hat = std::move(omega);
  est.tau_hat = std::move(tau);
  return est;
}

NuisanceEstimates take_nuisance(const NuisanceEstimates& nuisance, const RctDataset& subset,
                                std::span<const std::size_t> indices, double epsilon) {
  if (nuisance.coverage != NuisanceCoverage::full) {
    throw std::invalid_argument("take_nuisance requires full-coverage nuisance estimates");
  }
  std::vector<double> omega;
  std::vector<double> tau;
  omega.reserve(indices.size());
  tau.reserve(indices.size());
  for (auto i : indices) {
    omega.push_back(nuisance.omega_hat[i]);
    tau.push_back(nuisance.tau_hat[i]);
  }
  return make_nuisance(subset, std::move(omega), std::move(tau), NuisanceCoverage::full, epsilon);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::standard: return "standard";
    case Method::treated: return "treated";
    case Method::naive: return "naive";
    case Method::all_data: return "all_data";
    case Method::npw: return "npw";
    case Method::npw_omega_only: return "npw_omega_only";
    case Method::npw_tau_only: return "npw_tau_only";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::standard, Method::treated, Method::naive, Method::all_data, Method::npw,
                 Method::npw_omega_only, Method::npw_tau_only}) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown method '" + std::string(name) + "'");
}

bool needs_nuisance(Method method) {
  return method == Method::npw || method == Method::npw_omega_only ||
         method == Method::npw_tau_only;
}

}  // namespace npw
