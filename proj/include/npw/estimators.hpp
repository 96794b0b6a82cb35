#pragma once

#include <string_view>

#include "npw/metrics.hpp"
#include "npw/types.hpp"

namespace npw {

// How the treated-arm alternative estimate is formed from the two weighting
// paths.
enum class Combine { average, omega_only, tau_only };

std::string_view to_string(Combine combine);
Combine parse_combine(std::string_view name);

struct NpwConfig {
  Combine combine = Combine::average;
  Tie tie = Tie::strict;
  // The tau path can leave [0,1]; it is reported raw unless this is set.
  bool clip_tau_path = false;
  double epsilon = kProbEpsilon;
};

// AUC on the control arm only.
AucEstimate auc_standard(const RctDataset& dataset, const ScoreSet& scores, Tie tie = Tie::strict);

// AUC on the treated arm only.
AucEstimate auc_treated(const RctDataset& dataset, const ScoreSet& scores, Tie tie = Tie::strict);

// (1 - pi) * control AUC + pi * treated AUC.
AucEstimate auc_naive(const RctDataset& dataset, const ScoreSet& scores, Tie tie = Tie::strict);

// AUC over all samples, ignoring the arm.
AucEstimate auc_all(const RctDataset& dataset, const ScoreSet& scores, Tie tie = Tie::strict);

// Treated samples reweighted by omega_hat (positive side) and
// 1 - omega_hat (negative side), self pairs excluded.
AucEstimate auc_npw_omega(const RctDataset& dataset, const ScoreSet& scores,
                          const NuisanceEstimates& nuisance, Tie tie = Tie::strict);

// Closed-form CATE-corrected treated AUC:
//   [mu1(1-mu1) AUC_D1 + (mu1 - tau/2) tau - mean_i tau_i F(f_i)] / [mu0(1-mu0)]
// where F is the empirical score CDF over the treated arm.
AucEstimate auc_npw_tau(const RctDataset& dataset, const ScoreSet& scores,
                        const NuisanceEstimates& nuisance, Tie tie = Tie::strict,
                        bool clip = false);

// (1 - pi) * control AUC + pi * alternative, alternative chosen by
// config.combine.
AucEstimate auc_npw(const RctDataset& dataset, const ScoreSet& scores,
                    const NuisanceEstimates& nuisance, const NpwConfig& config = {});

// Dispatches on method. nuisance may be null for methods that do not need it.
AucEstimate estimate(Method method, const RctDataset& dataset, const ScoreSet& scores,
                     const NuisanceEstimates* nuisance, const NpwConfig& config = {});

}  // namespace npw
