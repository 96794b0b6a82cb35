#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "npw/dgp.hpp"
#include "npw/harness.hpp"
#include "npw/types.hpp"

namespace npw {

// Source of the randomization probability: a fixed design value or the
// empirical treated share.
struct PiSource {
  std::optional<double> value;
  bool empirical = false;

  static PiSource parse(std::string_view text);  // "0.5" or "empirical"
};

// Synthetic-pool columns, present only in simulated files.
struct PoolColumns {
  std::vector<int> y0;
  std::vector<int> y1;
  std::vector<double> omega_true;
  std::vector<double> tau_true;
  std::vector<double> tau_effective;
};

struct LoadedData {
  RctDataset dataset;
  std::vector<std::string> feature_names;
  std::vector<ScoreSet> scores;  // one per score__<name> column, in file order
  std::optional<NuisanceEstimates> nuisance;  // when omega_hat and tau_hat are present
  PoolColumns pool;
};

// Columns: t, y (required); score__<name>, omega_hat, tau_hat, x_<k>, y0, y1,
// omega_true, tau_true, tau_effective (optional). Any other column is
// rejected. Errors name the 1-based line and the column.
LoadedData parse_csv(std::istream& in, const PiSource& pi, double epsilon = kProbEpsilon);
LoadedData load_csv(const std::string& path, const PiSource& pi, double epsilon = kProbEpsilon);

struct DatasetColumns {
  const RctDataset* dataset = nullptr;
  std::vector<std::string> feature_names;  // defaults to x_0, x_1, ...
  std::vector<ScoreSet> scores;
  const NuisanceEstimates* nuisance = nullptr;  // full coverage only
  const PoolColumns* pool = nullptr;
};

void write_dataset_csv(std::ostream& out, const DatasetColumns& columns);

// Writes to a sibling temporary file and renames it into place, so a failed
// write never leaves a partial file.
void write_file_atomic(const std::string& path, std::string_view content);

enum class ReportFormat { json, csv };
std::string_view to_string(ReportFormat format);
ReportFormat parse_report_format(std::string_view name);

std::string render_report(const ExperimentReport& report, ReportFormat format);
ExperimentReport parse_report(std::string_view text, ReportFormat format);
void write_report(const ExperimentReport& report, const std::string& path, ReportFormat format);
// Format inferred from the content (a JSON object starts with '{').
ExperimentReport read_report(const std::string& path);

// Everything a flat key = value run configuration can set.
struct RunConfig {
  SweepConfig sweep;
  PowerConfig power;
  double power_auc_a = 0.75;  // null-favored model
  double power_auc_b = 0.80;
  double power_oracle_variance = 0.01;
};

// Lines of "key = value"; '#' starts a comment. Unknown keys and malformed
// values throw UsageError naming the key.
void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);
RunConfig load_run_config(const std::string& path);

}  // namespace npw
