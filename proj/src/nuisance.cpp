#include "npw/nuisance.hpp"

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

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double linear(std::span<const double> x, std::span<const double> w, double b) {
  double z = b;
  for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
  return z;
}

void check_fit_inputs(const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw std::invalid_argument("fit_logistic: no samples");
  if (features.rows() != labels.size()) throw std::invalid_argument("fit_logistic: length mismatch");
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_logistic: non-finite features");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("fit_logistic: labels must be binary");
  }
}

}  // namespace

double logistic_loss(const Matrix& features, std::span<const int> labels,
                     std::span<const double> weights, double intercept, double l2_penalty) {
  const std::size_t n = features.rows();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = linear(features.row(i), weights, intercept);
    loss += softplus(z) - labels[i] * z;
  }
  double norm2 = 0.0;
  for (double w : weights) norm2 += w * w;
  const auto nn = static_cast<double>(n);
  return loss / nn + l2_penalty / (2.0 * nn) * norm2;
}

std::vector<double> logistic_gradient(const Matrix& features, std::span<const int> labels,
                                      std::span<const double> weights, double intercept,
                                      double l2_penalty) {
  const std::size_t n = features.rows();
  const std::size_t p = features.cols();
  std::vector<double> grad(p + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    const double r = sigmoid(linear(x, weights, intercept)) - labels[i];
    for (std::size_t j = 0; j < p; ++j) grad[j] += r * x[j];
    grad[p] += r;
  }
  const auto nn = static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j) grad[j] = grad[j] / nn + l2_penalty / nn * weights[j];
  grad[p] /= nn;
  return grad;
}

LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels,
                           const LearnerConfig& config, std::vector<double>* loss_trace) {
  check_fit_inputs(features, labels);
  const std::size_t p = features.cols();
  LogisticModel model;
  model.weights.assign(p, 0.0);

  const double rate = std::accumulate(labels.begin(), labels.end(), 0.0) /
                      static_cast<double>(labels.size());
  if (rate == 0.0 || rate == 1.0) {
    const double q = clamp_probability(rate);
    model.intercept = std::log(q / (1.0 - q));
    model.degenerate = true;
    model.converged = true;
    return model;
  }

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    if (loss_trace) {
      loss_trace->push_back(
          logistic_loss(features, labels, model.weights, model.intercept, config.l2_penalty));
    }
    const auto grad =
        logistic_gradient(features, labels, model.weights, model.intercept, config.l2_penalty);
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    if (std::sqrt(norm2) < config.convergence_tol) {
      model.converged = true;
      break;
    }
    for (std::size_t j = 0; j < p; ++j) model.weights[j] -= config.step_size * grad[j];
    model.intercept -= config.step_size * grad[p];
    model.iterations = it + 1;
  }
  return model;
}

std::vector<double> predict_linear(const LogisticModel& model, const Matrix& features) {
  if (features.cols() != model.weights.size()) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out[i] = linear(features.row(i), model.weights, model.intercept);
  }
  return out;
}

std::vector<double> predict_proba(const LogisticModel& model, const Matrix& features,
                                  double epsilon) {
  auto out = predict_linear(model, features);
  for (double& z : out) z = clamp_probability(sigmoid(z), epsilon);
  return out;
}

Standardizer Standardizer::fit(const Matrix& features, std::span<const std::size_t> rows) {
  const std::size_t p = features.cols();
  Standardizer s{std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
  if (rows.empty()) return s;
  const auto n = static_cast<double>(rows.size());
  for (auto i : rows) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += features(i, j);
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(p, 0.0);
  for (auto i : rows) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = features(i, j) - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features, std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), features.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      out(k, j) = (features(rows[k], j) - mean[j]) / scale[j];
    }
  }
  return out;
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross-fitting needs at least 2 folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n, 0);
  for (std::size_t r = 0; r < n; ++r) fold_of[order[r]] = r % folds;
  return fold_of;
}

CrossFitResult cross_fit_nuisance(const RctDataset& dataset, const CrossFitConfig& config) {
  if (config.folds < 2) throw std::invalid_argument("cross-fitting needs at least 2 folds");
  if (dataset.size() < config.folds) throw DataError("cross-fitting needs at least as many samples as folds");
  return cross_fit_nuisance(dataset, config, assign_folds(dataset.size(), config.folds, config.seed));
}

CrossFitResult cross_fit_nuisance(const RctDataset& dataset, const CrossFitConfig& config,
                                  std::span<const std::size_t> fold_of) {
  require_valid(dataset);
  const std::size_t n = dataset.size();
  const std::size_t k = config.folds;
  if (k < 2) throw std::invalid_argument("cross-fitting needs at least 2 folds");
  if (fold_of.size() != n) throw std::invalid_argument("fold assignment does not match the dataset");
  for (auto f : fold_of) {
    if (f >= k) throw std::invalid_argument("fold index out of range");
  }

  CrossFitResult result;
  result.fold_of.assign(fold_of.begin(), fold_of.end());
  result.training_rows.resize(k);

  std::vector<double> omega(n, 0.5);
  std::vector<double> mu1_x(n, 0.5);

  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> held;
    std::vector<std::size_t> train_control;
    std::vector<std::size_t> train_treated;
    for (std::size_t i = 0; i < n; ++i) {
      if (result.fold_of[i] == fold) {
        held.push_back(i);
        continue;
      }
      train.push_back(i);
      (dataset.treatment[i] == 1 ? train_treated : train_control).push_back(i);
    }
    if (train_control.empty() || train_treated.empty()) {
      throw DataError("insufficient arm data for cross-fitting");
    }

    const auto scaler = Standardizer::fit(dataset.features, train);
    const auto fit_arm = [&](const std::vector<std::size_t>& rows) {
      std::vector<int> labels;
      labels.reserve(rows.size());
      for (auto i : rows) labels.push_back(dataset.outcome[i]);
      return fit_logistic(scaler.apply(dataset.features, rows), labels, config.learner);
    };
    const auto baseline_model = fit_arm(train_control);
    const auto treated_model = fit_arm(train_treated);

    const Matrix held_x = scaler.apply(dataset.features, held);
    const auto omega_held = predict_proba(baseline_model, held_x);
    const auto mu1_held = predict_proba(treated_model, held_x);
    for (std::size_t r = 0; r < held.size(); ++r) {
      omega[held[r]] = omega_held[r];
      mu1_x[held[r]] = mu1_held[r];
    }
    result.training_rows[fold] = std::move(train);
  }

  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) tau[i] = mu1_x[i] - omega[i];
  result.nuisance = make_nuisance(dataset, std::move(omega), std::move(tau));
  result.mu1_x_hat = std::move(mu1_x);
  return result;
}

bool out_of_fold_holds(const CrossFitResult& result) {
  for (std::size_t i = 0; i < result.fold_of.size(); ++i) {
    const auto& train = result.training_rows.at(result.fold_of[i]);
    if (std::find(train.begin(), train.end(), i) != train.end()) return false;
  }
  return true;
}

OracleDraw noisy_oracle_draw(std::span<const double> omega, std::span<const double> tau,
                             double variance, Rng& rng, double epsilon) {
  if (omega.size() != tau.size()) throw std::invalid_argument("noisy_oracle: length mismatch");
  if (!(variance >= 0.0)) throw std::invalid_argument("noisy_oracle: variance must be >= 0");
  OracleDraw draw;
  draw.omega_raw.assign(omega.begin(), omega.end());
  draw.tau_hat.assign(tau.begin(), tau.end());
  if (variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    for (std::size_t i = 0; i < omega.size(); ++i) {
      draw.omega_raw[i] += noise(rng);
      draw.tau_hat[i] += noise(rng);
    }
  }
  draw.omega_hat.resize(omega.size());
  std::transform(draw.omega_raw.begin(), draw.omega_raw.end(), draw.omega_hat.begin(),
                 [epsilon](double w) { return clamp_probability(w, epsilon); });
  return draw;
}

NuisanceEstimates noisy_oracle(const RctDataset& dataset, std::span<const double> omega,
                               std::span<const double> tau, double variance, Rng& rng,
                               double epsilon) {
  auto draw = noisy_oracle_draw(omega, tau, variance, rng, epsilon);
  return make_nuisance(dataset, std::move(draw.omega_hat), std::move(draw.tau_hat),
                       NuisanceCoverage::full, epsilon);
}

}  // namespace npw
