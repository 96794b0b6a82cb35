#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace npw {

// How a tied pair is scored: strict counts it 0 (the literal indicator
// 1{f(x_i) > f(x_j)}), half counts it 0.5.
enum class Tie { strict, half };

std::string_view to_string(Tie tie);
Tie parse_tie(std::string_view name);

inline double tie_value(Tie tie) { return tie == Tie::half ? 0.5 : 0.0; }

inline double pair_score(double pos, double neg, Tie tie) {
  if (pos > neg) return 1.0;
  if (pos == neg) return tie_value(tie);
  return 0.0;
}

// Fraction of (positive, negative) pairs ranked correctly. Sort-based,
// O((P + N) log N).
double auc(std::span<const double> pos_scores, std::span<const double> neg_scores,
           Tie tie = Tie::strict);

// Self-normalized weighted AUC:
//   sum_ij w+_i w-_j s(i,j) / sum_ij w+_i w-_j.
// With exclude_same_index both sides must describe the same sample list and
// the i == j pairs are dropped from numerator and denominator.
double weighted_auc(std::span<const double> pos_scores, std::span<const double> pos_weights,
                    std::span<const double> neg_scores, std::span<const double> neg_weights,
                    Tie tie = Tie::strict, bool exclude_same_index = false);

// Entry k is the mean pair score of query_k against every reference score.
std::vector<double> empirical_cdf(std::span<const double> query,
                                  std::span<const double> reference, Tie tie = Tie::strict);

// Concordance over unordered pairs with distinct true values; estimate ties
// score 0.5.
double c_index(std::span<const double> estimated_values, std::span<const double> true_values);

double mae(std::span<const double> estimates, std::span<const double> truths);

}  // namespace npw
