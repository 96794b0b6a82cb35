#pragma once

#include <span>
#include <vector>

namespace npw {

// Population quantities of the trial: randomization probability and the
// outcome rates without (mu0) and with (mu1) intervention.
class PopulationParams {
 public:
  // Throws std::invalid_argument unless pi is in [0,1] and mu0, mu1 in (0,1).
  PopulationParams(double pi, double mu0, double mu1);

  double pi() const noexcept { return pi_; }
  double mu0() const noexcept { return mu0_; }
  double mu1() const noexcept { return mu1_; }
  double tau() const noexcept { return mu1_ - mu0_; }

 private:
  double pi_;
  double mu0_;
  double mu1_;
};

struct BiasCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};

// alpha = pi tau (1 - mu0 - mu1) / (mu1 (1 - mu1)),  beta = pi / (mu1 (1 - mu1)).
BiasCoefficients bias_params(const PopulationParams& p);

// Population covariance (denominator n) between per-sample CATE values and
// per-sample score-CDF values.
double sigma_f(std::span<const double> tau_values, std::span<const double> cdf_values);

struct BiasDiagnostics {
  double alpha = 0.0;
  double beta = 0.0;
  double delta_f = 0.0;  // true AUC - 0.5
  double sigma_f = 0.0;
  double predicted_bias = 0.0;
};

// Expected bias of the naive augmented AUC: alpha * delta_f - beta * sigma_f.
double naive_bias(const PopulationParams& p, double delta_f, double sigma_f);

BiasDiagnostics bias_diagnostics(const PopulationParams& p, double delta_f, double sigma_f);

// True iff theta_hat_1 - theta_hat_2 < beta (sigma_1 - sigma_2): the naive
// estimate prefers model 1 although its true AUC is lower. Requires
// theta_hat_1 > theta_hat_2.
//
// Follows from theta_hat = (1 - alpha) theta + alpha / 2 + beta sigma with
// alpha < 1, so the sign of theta_1 - theta_2 is the sign of
// (theta_hat_1 - theta_hat_2) - beta (sigma_1 - sigma_2).
bool misselection_condition(double theta_hat_1, double theta_hat_2, double beta, double sigma_1,
                            double sigma_2);

struct ModelSummary {
  double theta_hat = 0.0;  // expected naive estimate
  double sigma = 0.0;
};

// Fraction of unordered model pairs meeting the misselection condition once
// each pair is ordered by theta_hat. Pairs with equal theta_hat never count.
double misselection_rate(std::span<const ModelSummary> models, double beta);

// (1-pi)^2 auc_00 + pi^2 auc_11 + (pi - pi^2)(auc_01 + auc_10), where auc_ab
// ranks arm-a positives against arm-b negatives.
double all_data_mixture(double auc_00, double auc_11, double auc_01, double auc_10, double pi);

}  // namespace npw
