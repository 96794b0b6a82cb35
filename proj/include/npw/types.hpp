#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace npw {

// Clamp applied to every estimated or simulated probability.
inline constexpr double kProbEpsilon = 1e-6;

double clamp_probability(double p, double epsilon = kProbEpsilon);

// Fewest significant digits (at most 17) that parse back to the same double.
std::string format_number(double value);

// Dense row-major matrix. Zero columns is allowed (score-only datasets).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  Matrix take_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Observed randomized-trial data: features, binary outcome, binary arm.
struct RctDataset {
  Matrix features;
  std::vector<int> outcome;
  std::vector<int> treatment;
  double randomization_prob = 0.5;

  std::size_t size() const noexcept { return outcome.size(); }

  friend bool operator==(const RctDataset&, const RctDataset&) = default;
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

// Collects every violation; never throws. With require_both_arms set, an
// empty control or treated arm is reported as a violation.
ValidationResult validate_dataset(const RctDataset& dataset, bool require_both_arms = false);

// Throws DataError listing the violations when the dataset is invalid.
void require_valid(const RctDataset& dataset, bool require_both_arms = false);

// Original sample indices of each arm, in increasing order.
struct ArmSplit {
  std::vector<std::size_t> control;
  std::vector<std::size_t> treated;
};

ArmSplit split_by_treatment(const RctDataset& dataset);

RctDataset take_rows(const RctDataset& dataset, std::span<const std::size_t> indices);

// Fraction of treated samples; diagnostic only, pi is fixed by design.
double empirical_treatment_rate(const RctDataset& dataset);

struct ScoreSet {
  std::string model_name;
  std::vector<double> scores;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;
};

// Throws DataError when the scores do not match the dataset or are not finite.
void check_scores(const RctDataset& dataset, const ScoreSet& scores);

ScoreSet take_scores(const ScoreSet& scores, std::span<const std::size_t> indices);

enum class NuisanceCoverage {
  full,          // one entry per dataset sample
  treated_only,  // one entry per treated sample, in index order
};

struct NuisanceEstimates {
  std::vector<double> omega_hat;
  std::vector<double> tau_hat;
  double mu1_hat = 0.0;
  double mu0_hat = 0.0;
  double tau_bar_hat = 0.0;
  NuisanceCoverage coverage = NuisanceCoverage::full;
};

// Builds nuisance estimates from per-sample predictions. omega is clamped
// into [epsilon, 1 - epsilon]. Aggregates follow the treated-arm plug-in
// rule: mu1 = treated outcome rate, tau_bar = mean treated tau, and
// mu0 = clamp(mu1 - tau_bar).
NuisanceEstimates make_nuisance(const RctDataset& dataset, std::vector<double> omega,
                                std::vector<double> tau,
                                NuisanceCoverage coverage = NuisanceCoverage::full,
                                double epsilon = kProbEpsilon);

// Per-sample nuisance values restricted to a row subset (full coverage only),
// with aggregates recomputed on the subset.
NuisanceEstimates take_nuisance(const NuisanceEstimates& nuisance, const RctDataset& subset,
                                std::span<const std::size_t> indices,
                                double epsilon = kProbEpsilon);

enum class Method {
  standard,
  treated,
  naive,
  all_data,
  npw,
  npw_omega_only,
  npw_tau_only,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
bool needs_nuisance(Method method);

struct AucEstimate {
  Method method = Method::standard;
  double value = 0.0;
  std::size_t n_control = 0;
  std::size_t n_treated = 0;
  std::map<std::string, double> diagnostics;
};

}  // namespace npw
