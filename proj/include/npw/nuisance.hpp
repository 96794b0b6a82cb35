#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "npw/random.hpp"
#include "npw/types.hpp"

namespace npw {

struct LearnerConfig {
  double l2_penalty = 1.0;
  std::size_t max_iterations = 500;
  double step_size = 0.1;
  double convergence_tol = 1e-7;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Single-class training data: zero weights, intercept = logit(class rate).
  bool degenerate = false;
};

// Objective minimized by fit_logistic:
//   mean_i [log(1 + e^z_i) - y_i z_i] + l2 / (2 n) * |w|^2,  z = w.x + b.
double logistic_loss(const Matrix& features, std::span<const int> labels,
                     std::span<const double> weights, double intercept, double l2_penalty);

// Gradient of logistic_loss; the last entry is the intercept derivative.
std::vector<double> logistic_gradient(const Matrix& features, std::span<const int> labels,
                                      std::span<const double> weights, double intercept,
                                      double l2_penalty);

// Full-batch gradient descent from zero. Stops when the gradient norm drops
// below convergence_tol or after max_iterations. loss_trace, when given,
// receives the objective before every step.
LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels,
                           const LearnerConfig& config = {},
                           std::vector<double>* loss_trace = nullptr);

std::vector<double> predict_linear(const LogisticModel& model, const Matrix& features);

// Clamped sigmoid of the linear score, in [epsilon, 1 - epsilon].
std::vector<double> predict_proba(const LogisticModel& model, const Matrix& features,
                                  double epsilon = kProbEpsilon);

// Per-column affine map to mean 0, variance 1 (constant columns keep scale 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& features, std::span<const std::size_t> rows);
  Matrix apply(const Matrix& features, std::span<const std::size_t> rows) const;
};

struct CrossFitConfig {
  std::size_t folds = 5;
  LearnerConfig learner;
  std::uint64_t seed = 0;
};

struct CrossFitResult {
  NuisanceEstimates nuisance;
  std::vector<std::size_t> fold_of;                     // fold index per sample
  std::vector<std::vector<std::size_t>> training_rows;  // per fold
  std::vector<double> mu1_x_hat;                        // treated-outcome model, per sample
};

// k-fold cross-fitting. For every fold the baseline model (omega) is fit on
// the control samples of the other folds and the treated-outcome model on
// their treated samples; tau_hat = mu1(x) - omega(x).
CrossFitResult cross_fit_nuisance(const RctDataset& dataset, const CrossFitConfig& config);

// Same with a caller-supplied fold index per sample (each below config.folds).
CrossFitResult cross_fit_nuisance(const RctDataset& dataset, const CrossFitConfig& config,
                                  std::span<const std::size_t> fold_of);

// Shuffled balanced assignment: fold sizes differ by at most one.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

// True when no sample was scored by a model whose training rows include it.
bool out_of_fold_holds(const CrossFitResult& result);

struct OracleDraw {
  std::vector<double> omega_raw;  // omega + noise, before clipping
  std::vector<double> omega_hat;  // clipped
  std::vector<double> tau_hat;    // tau + noise, unclipped
};

// Adds N(0, variance) noise to true nuisance values. No random numbers are
// consumed when variance is zero.
OracleDraw noisy_oracle_draw(std::span<const double> omega, std::span<const double> tau,
                             double variance, Rng& rng, double epsilon = kProbEpsilon);

NuisanceEstimates noisy_oracle(const RctDataset& dataset, std::span<const double> omega,
                               std::span<const double> tau, double variance, Rng& rng,
                               double epsilon = kProbEpsilon);

}  // namespace npw
