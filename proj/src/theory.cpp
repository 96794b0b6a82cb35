#include "npw/theory.hpp"

#include <stdexcept>

namespace npw {

PopulationParams::PopulationParams(double pi, double mu0, double mu1)
    : pi_(pi), mu0_(mu0), mu1_(mu1) {
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("pi must lie in [0,1]");
  if (!(mu0 > 0.0 && mu0 < 1.0)) throw std::invalid_argument("mu0 must lie in (0,1)");
  if (!(mu1 > 0.0 && mu1 < 1.0)) throw std::invalid_argument("mu1 must lie in (0,1)");
}

BiasCoefficients bias_params(const PopulationParams& p) {
  const double spread = p.mu1() * (1.0 - p.mu1());
  if (!(spread > 0.0)) throw std::invalid_argument("mu1 at the boundary");
  return {p.pi() * p.tau() * (1.0 - p.mu0() - p.mu1()) / spread, p.pi() / spread};
}

double sigma_f(std::span<const double> tau_values, std::span<const double> cdf_values) {
  if (tau_values.size() != cdf_values.size()) {
    throw std::invalid_argument("sigma_f: length mismatch");
  }
  if (tau_values.size() < 2) throw std::invalid_argument("sigma_f: need at least 2 samples");
  const auto n = static_cast<double>(tau_values.size());
  double tau_mean = 0.0;
  double cdf_mean = 0.0;
  for (std::size_t i = 0; i < tau_values.size(); ++i) {
    tau_mean += tau_values[i];
    cdf_mean += cdf_values[i];
  }
  tau_mean /= n;
  cdf_mean /= n;
  double cov = 0.0;
  for (std::size_t i = 0; i < tau_values.size(); ++i) {
    cov += (tau_values[i] - tau_mean) * (cdf_values[i] - cdf_mean);
  }
  return cov / n;
}

double naive_bias(const PopulationParams& p, double delta_f, double sigma) {
  const auto [alpha, beta] = bias_params(p);
  return alpha * delta_f - beta * sigma;
}

BiasDiagnostics bias_diagnostics(const PopulationParams& p, double delta_f, double sigma) {
  const auto [alpha, beta] = bias_params(p);
  return {alpha, beta, delta_f, sigma, alpha * delta_f - beta * sigma};
}

bool misselection_condition(double theta_hat_1, double theta_hat_2, double beta, double sigma_1,
                            double sigma_2) {
  if (!(theta_hat_1 > theta_hat_2)) {
    throw std::invalid_argument("misselection_condition: requires theta_hat_1 > theta_hat_2");
  }
  return theta_hat_1 - theta_hat_2 < beta * (sigma_1 - sigma_2);
}

double misselection_rate(std::span<const ModelSummary> models, double beta) {
  if (models.size() < 2) throw std::invalid_argument("misselection_rate: need at least 2 models");
  std::size_t pairs = 0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      ++pairs;
      const auto& a = models[i];
      const auto& b = models[j];
      if (a.theta_hat == b.theta_hat) continue;
      const auto& hi = a.theta_hat > b.theta_hat ? a : b;
      const auto& lo = a.theta_hat > b.theta_hat ? b : a;
      if (misselection_condition(hi.theta_hat, lo.theta_hat, beta, hi.sigma, lo.sigma)) ++flagged;
    }
  }
  return static_cast<double>(flagged) / static_cast<double>(pairs);
}

double all_data_mixture(double auc_00, double auc_11, double auc_01, double auc_10, double pi) {
  return (1.0 - pi) * (1.0 - pi) * auc_00 + pi * pi * auc_11 + (pi - pi * pi) * (auc_01 + auc_10);
}

}  // namespace npw
