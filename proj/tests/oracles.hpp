#pragma once

// Independent reference implementations used as test oracles. Everything here
// is a direct double loop or textbook formula, never a call into the library
// kernels it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

inline double pair_value(double a, double b, bool half) {
  if (a > b) return 1.0;
  if (a == b) return half ? 0.5 : 0.0;
  return 0.0;
}

inline double auc(const std::vector<double>& pos, const std::vector<double>& neg, bool half) {
  double s = 0.0;
  for (double p : pos) {
    for (double n : neg) s += pair_value(p, n, half);
  }
  return s / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double weighted_auc(const std::vector<double>& pos, const std::vector<double>& wp,
                           const std::vector<double>& neg, const std::vector<double>& wn, bool half,
                           bool skip_diagonal) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = 0; j < neg.size(); ++j) {
      if (skip_diagonal && i == j) continue;
      num += wp[i] * wn[j] * pair_value(pos[i], neg[j], half);
      den += wp[i] * wn[j];
    }
  }
  return num / den;
}

inline double cdf_at(double q, const std::vector<double>& ref, bool half) {
  double s = 0.0;
  for (double r : ref) s += pair_value(q, r, half);
  return s / static_cast<double>(ref.size());
}

inline double c_index(const std::vector<double>& est, const std::vector<double>& truth) {
  double s = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      if (truth[i] == truth[j]) continue;
      count += 1.0;
      const double dt = truth[i] - truth[j];
      const double de = est[i] - est[j];
      if (de == 0.0) s += 0.5;
      else if ((de > 0.0) == (dt > 0.0)) s += 1.0;
    }
  }
  return s / count;
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma) * (b[i] - mb);
  return c / n;
}

// Signed pair weighting of the treated arm: positive-side weight
// (y_i - tau_i) / (m mu0), negative-side weight (1 - y_j + tau_j) / (m (1 - mu0)),
// summed over every ordered pair (i, j) of treated samples, including i == j.
inline double signed_pair_sum(const std::vector<double>& scores, const std::vector<int>& y,
                              const std::vector<double>& tau, double mu0, bool half) {
  const double m = static_cast<double>(scores.size());
  double s = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double a = (y[i] - tau[i]) / (m * mu0);
    for (std::size_t j = 0; j < scores.size(); ++j) {
      const double b = (1.0 - y[j] + tau[j]) / (m * (1.0 - mu0));
      s += a * b * pair_value(scores[i], scores[j], half);
    }
  }
  return s;
}

// Two-sided binomial band: the smallest lo and largest hi count with
// P(X < lo) <= (1 - level) / 2 and P(X > hi) <= (1 - level) / 2.
inline std::pair<int, int> binomial_band(int trials, double p, double level) {
  std::vector<double> pmf(trials + 1);
  for (int k = 0; k <= trials; ++k) {
    pmf[k] = std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) +
                      k * std::log(p) + (trials - k) * std::log1p(-p));
  }
  const double tail = (1.0 - level) / 2.0;
  int lo = 0;
  double below = 0.0;
  while (lo < trials && below + pmf[lo] <= tail) below += pmf[lo++];
  int hi = trials;
  double above = 0.0;
  while (hi > 0 && above + pmf[hi] <= tail) above += pmf[hi--];
  return {lo, hi};
}

inline std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, bool with_ties) {
  std::vector<double> out(n);
  if (with_ties) {
    std::uniform_int_distribution<int> d(0, 9);
    for (auto& v : out) v = d(rng) / 10.0;
  } else {
    std::normal_distribution<double> d(0.0, 1.0);
    for (auto& v : out) v = d(rng);
  }
  return out;
}

}  // namespace oracle
