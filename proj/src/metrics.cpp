#include "npw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "npw/error.hpp"

namespace npw {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view to_string(Tie tie) { return tie == Tie::half ? "half" : "strict"; }

Tie parse_tie(std::string_view name) {
  if (name == "strict") return Tie::strict;
  if (name == "half") return Tie::half;
  throw UsageError("unknown tie policy '" + std::string(name) + "' (expected strict or half)");
}

double auc(std::span<const double> pos_scores, std::span<const double> neg_scores, Tie tie) {
  if (pos_scores.empty()) throw DegenerateError("auc: positive side is empty");
  if (neg_scores.empty()) throw DegenerateError("auc: negative side is empty");
  require_finite(pos_scores, "positive score");
  require_finite(neg_scores, "negative score");

  const auto neg = sorted_copy(neg_scores);
  std::uint64_t below = 0;
  std::uint64_t equal = 0;
  for (double p : pos_scores) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    below += static_cast<std::uint64_t>(lo - neg.begin());
    equal += static_cast<std::uint64_t>(hi - lo);
  }
  const double pairs =
      static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size());
  return (static_cast<double>(below) + tie_value(tie) * static_cast<double>(equal)) / pairs;
}

double weighted_auc(std::span<const double> pos_scores, std::span<const double> pos_weights,
                    std::span<const double> neg_scores, std::span<const double> neg_weights,
                    Tie tie, bool exclude_same_index) {
  if (pos_scores.size() != pos_weights.size() || neg_scores.size() != neg_weights.size()) {
    throw std::invalid_argument("weighted_auc: weights must match scores");
  }
  if (exclude_same_index && pos_scores.size() != neg_scores.size()) {
    throw std::invalid_argument("weighted_auc: diagonal exclusion needs one shared sample list");
  }
  require_finite(pos_scores, "positive score");
  require_finite(neg_scores, "negative score");
  for (auto weights : {pos_weights, neg_weights}) {
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) {
        throw std::invalid_argument("weighted_auc: weights must be finite and non-negative");
      }
    }
  }

  const std::size_t n_neg = neg_scores.size();
  std::vector<std::size_t> order(n_neg);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return neg_scores[a] < neg_scores[b]; });
  std::vector<double> sorted(n_neg);
  std::vector<double> cumulative(n_neg + 1, 0.0);
  for (std::size_t k = 0; k < n_neg; ++k) {
    sorted[k] = neg_scores[order[k]];
    cumulative[k + 1] = cumulative[k] + neg_weights[order[k]];
  }
  const double neg_total = cumulative[n_neg];
  const double tv = tie_value(tie);

  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < pos_scores.size(); ++i) {
    const double w = pos_weights[i];
    if (w == 0.0) continue;
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), pos_scores[i]);
    const auto hi = std::upper_bound(lo, sorted.end(), pos_scores[i]);
    const double below = cumulative[static_cast<std::size_t>(lo - sorted.begin())];
    const double equal = cumulative[static_cast<std::size_t>(hi - sorted.begin())] - below;
    double num = below + tv * equal;
    double den = neg_total;
    if (exclude_same_index) {
      // The self pair is always a tie.
      num -= tv * neg_weights[i];
      den -= neg_weights[i];
    }
    numerator += w * num;
    denominator += w * den;
  }
  if (!(denominator > 0.0)) throw DegenerateError("weighted_auc: degenerate weighting");
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

std::vector<double> empirical_cdf(std::span<const double> query,
                                  std::span<const double> reference, Tie tie) {
  if (reference.empty()) throw DegenerateError("empirical_cdf: empty reference");
  require_finite(query, "query score");
  require_finite(reference, "reference score");
  const auto ref = sorted_copy(reference);
  const double tv = tie_value(tie);
  const auto m = static_cast<double>(ref.size());
  std::vector<double> out;
  out.reserve(query.size());
  for (double q : query) {
    const auto lo = std::lower_bound(ref.begin(), ref.end(), q);
    const auto hi = std::upper_bound(lo, ref.end(), q);
    out.push_back((static_cast<double>(lo - ref.begin()) + tv * static_cast<double>(hi - lo)) / m);
  }
  return out;
}

double c_index(std::span<const double> estimated_values, std::span<const double> true_values) {
  if (estimated_values.size() != true_values.size()) {
    throw std::invalid_argument("c_index: length mismatch");
  }
  if (estimated_values.size() < 2) throw std::invalid_argument("c_index: need at least 2 values");
  double score = 0.0;
  std::uint64_t comparable = 0;
  const std::size_t n = true_values.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (true_values[i] == true_values[j]) continue;
      ++comparable;
      const double dt = true_values[i] - true_values[j];
      const double de = estimated_values[i] - estimated_values[j];
      if (de == 0.0) {
        score += 0.5;
      } else if ((dt > 0) == (de > 0)) {
        score += 1.0;
      }
    }
  }
  if (comparable == 0) throw DegenerateError("c_index: no comparable pairs");
  return score / static_cast<double>(comparable);
}

double mae(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw std::invalid_argument("mae: length mismatch");
  if (estimates.empty()) throw std::invalid_argument("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) total += std::abs(estimates[i] - truths[i]);
  return total / static_cast<double>(estimates.size());
}

}  // namespace npw
