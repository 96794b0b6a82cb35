#include "npw/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include "npw/error.hpp"

namespace npw {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kScorePrefix = "score__";
constexpr std::string_view kFeaturePrefix = "x_";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view text) {
  const std::string s(trim(text));
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::string line_error(std::size_t line, std::string_view what) {
  return "line " + std::to_string(line) + ": " + std::string(what);
}

enum class ColumnKind { t, y, score, omega_hat, tau_hat, feature, y0, y1, omega_true, tau_true, tau_effective };

ColumnKind classify(const std::string& name) {
  if (name == "t") return ColumnKind::t;
  if (name == "y") return ColumnKind::y;
  if (name == "omega_hat") return ColumnKind::omega_hat;
  if (name == "tau_hat") return ColumnKind::tau_hat;
  if (name == "y0") return ColumnKind::y0;
  if (name == "y1") return ColumnKind::y1;
  if (name == "omega_true") return ColumnKind::omega_true;
  if (name == "tau_true") return ColumnKind::tau_true;
  if (name == "tau_effective") return ColumnKind::tau_effective;
  if (name.starts_with(kScorePrefix) && name.size() > kScorePrefix.size()) return ColumnKind::score;
  if (name.starts_with(kFeaturePrefix) && name.size() > kFeaturePrefix.size()) return ColumnKind::feature;
  throw DataError("unknown column '" + name + "'");
}

double json_number(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

ordered_json number_json(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// Splits one CSV record honoring double quotes.
std::vector<std::string> split_quoted(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        out.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  for (const auto& item : split_fields(value)) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, double>) {
      const auto v = parse_double(item);
      if (!v) throw UsageError("config key '" + std::string(key) + "': not a number: " + item);
      out.push_back(*v);
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      const auto v = parse_double(item);
      if (!v || *v < 0 || *v != std::floor(*v)) {
        throw UsageError("config key '" + std::string(key) + "': not a count: " + item);
      }
      out.push_back(static_cast<std::size_t>(*v));
    } else {
      out.push_back(parse_method(item));
    }
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v) throw UsageError("config key '" + std::string(key) + "': not a number: " + std::string(value));
  return *v;
}

std::uint64_t parse_count(std::string_view key, std::string_view value) {
  const std::string s(trim(value));
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size()) {
    throw UsageError("config key '" + std::string(key) + "': not a count: " + s);
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config key '" + std::string(key) + "': not a boolean: " + std::string(v));
}

}  // namespace

PiSource PiSource::parse(std::string_view text) {
  PiSource pi;
  if (trim(text) == "empirical") {
    pi.empirical = true;
    return pi;
  }
  const auto v = parse_double(text);
  if (!v || !(*v >= 0.0 && *v <= 1.0)) throw UsageError("--pi must be in [0,1] or 'empirical'");
  pi.value = *v;
  return pi;
}

LoadedData parse_csv(std::istream& in, const PiSource& pi, double epsilon) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: header row is required");
  const auto header = split_fields(line);
  std::vector<ColumnKind> kinds;
  for (const auto& name : header) kinds.push_back(classify(name));
  const auto has = [&](ColumnKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  if (!has(ColumnKind::t)) throw DataError("missing required column 't'");
  if (!has(ColumnKind::y)) throw DataError("missing required column 'y'");
  for (std::size_t a = 0; a < header.size(); ++a) {
    for (std::size_t b = a + 1; b < header.size(); ++b) {
      if (header[a] == header[b]) throw DataError("duplicate column '" + header[a] + "'");
    }
  }

  LoadedData data;
  std::vector<std::size_t> feature_cols;
  std::vector<std::size_t> score_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (kinds[c] == ColumnKind::feature) {
      feature_cols.push_back(c);
      data.feature_names.push_back(header[c]);
    } else if (kinds[c] == ColumnKind::score) {
      score_cols.push_back(c);
      data.scores.push_back({header[c].substr(kScorePrefix.size()), {}});
    }
  }

  std::vector<double> features;
  std::vector<double> omega_hat;
  std::vector<double> tau_hat;
  auto& pool = data.pool;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(line_error(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                              std::to_string(fields.size())));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(line_error(line_no, "column '" + header[c] + "': not a finite number"));
      }
      values[c] = *v;
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const double v = values[c];
      const bool binary = v == 0.0 || v == 1.0;
      switch (kinds[c]) {
        case ColumnKind::t:
          if (!binary) throw DataError(line_error(line_no, "non-binary treatment"));
          data.dataset.treatment.push_back(static_cast<int>(v));
          break;
        case ColumnKind::y:
          if (!binary) throw DataError(line_error(line_no, "non-binary outcome"));
          data.dataset.outcome.push_back(static_cast<int>(v));
          break;
        case ColumnKind::y0:
        case ColumnKind::y1:
          if (!binary) throw DataError(line_error(line_no, "column '" + header[c] + "': non-binary outcome"));
          (kinds[c] == ColumnKind::y0 ? pool.y0 : pool.y1).push_back(static_cast<int>(v));
          break;
        case ColumnKind::omega_hat: omega_hat.push_back(v); break;
        case ColumnKind::tau_hat: tau_hat.push_back(v); break;
        case ColumnKind::omega_true: pool.omega_true.push_back(v); break;
        case ColumnKind::tau_true: pool.tau_true.push_back(v); break;
        case ColumnKind::tau_effective: pool.tau_effective.push_back(v); break;
        case ColumnKind::feature:
        case ColumnKind::score: break;
      }
    }
    for (auto c : feature_cols) features.push_back(values[c]);
    for (std::size_t k = 0; k < score_cols.size(); ++k) data.scores[k].scores.push_back(values[score_cols[k]]);
  }

  auto& ds = data.dataset;
  const std::size_t n = ds.outcome.size();
  ds.features = Matrix(n, feature_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) ds.features(i, j) = features[i * feature_cols.size() + j];
  }
  if (!pi.value && !pi.empirical) throw UsageError("randomization probability required: pass --pi <value> or --pi empirical");
  ds.randomization_prob = pi.value ? *pi.value : (n > 0 ? empirical_treatment_rate(ds) : 0.5);

  const bool has_omega = has(ColumnKind::omega_hat);
  const bool has_tau = has(ColumnKind::tau_hat);
  if (has_omega != has_tau) throw DataError("omega_hat and tau_hat must be supplied together");
  if (has_omega) {
    data.nuisance = make_nuisance(ds, std::move(omega_hat), std::move(tau_hat), NuisanceCoverage::full, epsilon);
  }
  return data;
}

LoadedData load_csv(const std::string& path, const PiSource& pi, double epsilon) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, pi, epsilon);
}

void write_dataset_csv(std::ostream& out, const DatasetColumns& columns) {
  if (!columns.dataset) throw std::invalid_argument("write_dataset_csv: no dataset");
  const auto& ds = *columns.dataset;
  const std::size_t n = ds.size();
  const std::size_t d = ds.features.cols();
  auto names = columns.feature_names;
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back(std::string(kFeaturePrefix) + std::to_string(j));
  }
  if (names.size() != d) throw std::invalid_argument("write_dataset_csv: feature name count mismatch");
  if (columns.nuisance && columns.nuisance->coverage != NuisanceCoverage::full) {
    throw std::invalid_argument("write_dataset_csv: nuisance must cover every row");
  }

  std::string line = "t,y";
  for (const auto& name : names) line += ',' + name;
  for (const auto& s : columns.scores) line += "," + std::string(kScorePrefix) + s.model_name;
  if (columns.nuisance) line += ",omega_hat,tau_hat";
  const auto* pool = columns.pool;
  if (pool) line += ",y0,y1,omega_true,tau_true,tau_effective";
  out << line << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    line = std::to_string(ds.treatment[i]) + ',' + std::to_string(ds.outcome[i]);
    for (std::size_t j = 0; j < d; ++j) line += ',' + format_number(ds.features(i, j));
    for (const auto& s : columns.scores) line += ',' + format_number(s.scores.at(i));
    if (columns.nuisance) {
      line += ',' + format_number(columns.nuisance->omega_hat.at(i)) + ',' +
              format_number(columns.nuisance->tau_hat.at(i));
    }
    if (pool) {
      line += ',' + std::to_string(pool->y0.at(i)) + ',' + std::to_string(pool->y1.at(i)) + ',' +
              format_number(pool->omega_true.at(i)) + ',' + format_number(pool->tau_true.at(i)) + ',' +
              format_number(pool->tau_effective.at(i));
    }
    out << line << '\n';
  }
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot write '" + path + "'");
  }
}

std::string_view to_string(ReportFormat format) { return format == ReportFormat::json ? "json" : "csv"; }

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw UsageError("unknown format: " + std::string(name));
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    ordered_json j;
    j["metric"] = report.metric;
    j["provenance"] = ordered_json::object();
    for (const auto& [k, v] : report.provenance) j["provenance"][k] = v;
    j["rows"] = ordered_json::array();
    for (const auto& row : report.rows) {
      ordered_json setting = ordered_json::object();
      for (const auto& [k, v] : row.setting) setting[k] = v;
      j["rows"].push_back({{"setting", setting},
                           {"method", row.method},
                           {"mean", number_json(row.mean)},
                           {"ci_lo", number_json(row.ci_lo)},
                           {"ci_hi", number_json(row.ci_hi)},
                           {"used", row.used},
                           {"skipped", row.skipped}});
    }
    return j.dump(2) + "\n";
  }
  std::string out = "setting,method,stat,value\n";
  for (const auto& row : report.rows) {
    const std::string prefix = csv_field(format_labels(row.setting)) + ',' + csv_field(row.method) + ',';
    out += prefix + "mean," + format_number(row.mean) + '\n';
    out += prefix + "ci_lo," + format_number(row.ci_lo) + '\n';
    out += prefix + "ci_hi," + format_number(row.ci_hi) + '\n';
  }
  return out;
}

ExperimentReport parse_report(std::string_view text, ReportFormat format) {
  ExperimentReport report;
  if (format == ReportFormat::json) {
    ordered_json j;
    try {
      j = ordered_json::parse(text);
      report.metric = j.at("metric").get<std::string>();
      for (const auto& [k, v] : j.at("provenance").items()) report.provenance[k] = v.get<std::string>();
      for (const auto& r : j.at("rows")) {
        ReportRow row;
        for (const auto& [k, v] : r.at("setting").items()) row.setting.emplace_back(k, v.get<std::string>());
        row.method = r.at("method").get<std::string>();
        row.mean = json_number(r.at("mean"));
        row.ci_lo = json_number(r.at("ci_lo"));
        row.ci_hi = json_number(r.at("ci_hi"));
        row.used = r.at("used").get<std::size_t>();
        row.skipped = r.at("skipped").get<std::size_t>();
        report.rows.push_back(std::move(row));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed report: ") + e.what());
    }
    return report;
  }

  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != "setting,method,stat,value") {
    throw DataError("malformed report: expected header setting,method,stat,value");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_quoted(line);
    if (f.size() != 4) throw DataError(line_error(line_no, "expected 4 fields"));
    const auto setting = parse_labels(f[0]);
    if (report.rows.empty() || report.rows.back().setting != setting || report.rows.back().method != f[1]) {
      report.rows.push_back(ReportRow{setting, f[1], 0.0, 0.0, 0.0, 0, 0});
    }
    const auto value = parse_double(f[3]);
    if (!value) throw DataError(line_error(line_no, "column 'value': not a number"));
    auto& row = report.rows.back();
    if (f[2] == "mean") {
      row.mean = *value;
    } else if (f[2] == "ci_lo") {
      row.ci_lo = *value;
    } else if (f[2] == "ci_hi") {
      row.ci_hi = *value;
    } else {
      throw DataError(line_error(line_no, "column 'stat': unknown statistic " + f[2]));
    }
  }
  return report;
}

void write_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
  write_file_atomic(path, render_report(report, format));
}

ExperimentReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = first != std::string::npos && text[first] == '{';
  return parse_report(text, json ? ReportFormat::json : ReportFormat::csv);
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  auto& s = config.sweep;
  auto& d = s.dgp;
  auto& p = config.power;
  const std::string k(key);
  const std::string v(trim(value));
  try {
    if (k == "dim") d.dim = parse_count(k, v);
    else if (k == "pool_size") d.pool_size = parse_count(k, v);
    else if (k == "delta") d.delta = parse_real(k, v);
    else if (k == "pi") d.pi = parse_real(k, v);
    else if (k == "w_y_density") d.w_y_density = parse_real(k, v);
    else if (k == "w_tau_support") d.w_tau_support = parse_list<double>(k, v);
    else if (k == "w_tau_probs") d.w_tau_probs = parse_list<double>(k, v);
    else if (k == "prob_clip") d.prob_clip = parse_real(k, v);
    else if (k == "dgp_seed") d.seed = parse_count(k, v);
    else if (k == "tau_form") d.tau_form = parse_tau_form(v);
    else if (k == "truth") d.truth = parse_truth_convention(v);
    else if (k == "n_rct") s.n_rct = parse_count(k, v);
    else if (k == "replications") s.replications = parse_count(k, v);
    else if (k == "ate_grid") s.ate_grid = parse_list<double>(k, v);
    else if (k == "noise_grid") s.noise_grid = parse_list<double>(k, v);
    else if (k == "nuisance_mode") s.nuisance_mode = parse_nuisance_mode(v);
    else if (k == "estimators") s.estimator_set = p.methods = parse_list<Method>(k, v);
    else if (k == "tie") s.tie = p.npw.tie = parse_tie(v);
    else if (k == "base_seed") s.base_seed = p.base_seed = parse_count(k, v);
    else if (k == "outcome_mode") s.outcome_mode = parse_outcome_mode(v);
    else if (k == "training_sizes") s.training_sizes = parse_list<std::size_t>(k, v);
    else if (k == "spectrum_l2_penalty") s.spectrum_learner.l2_penalty = parse_real(k, v);
    else if (k == "spectrum_max_iterations") s.spectrum_learner.max_iterations = parse_count(k, v);
    else if (k == "spectrum_step_size") s.spectrum_learner.step_size = parse_real(k, v);
    else if (k == "spectrum_convergence_tol") s.spectrum_learner.convergence_tol = parse_real(k, v);
    else if (k == "folds") s.folds = parse_count(k, v);
    else if (k == "l2_penalty") s.nuisance_learner.l2_penalty = parse_real(k, v);
    else if (k == "max_iterations") s.nuisance_learner.max_iterations = parse_count(k, v);
    else if (k == "step_size") s.nuisance_learner.step_size = parse_real(k, v);
    else if (k == "convergence_tol") s.nuisance_learner.convergence_tol = parse_real(k, v);
    else if (k == "ci_draws") s.ci_draws = parse_count(k, v);
    else if (k == "ci_level") s.ci_level = parse_real(k, v);
    else if (k == "threads") s.threads = p.threads = static_cast<unsigned>(parse_count(k, v));
    else if (k == "n_grid") p.n_grid = parse_list<std::size_t>(k, v);
    else if (k == "bootstrap_samples") p.bootstrap_samples = parse_count(k, v);
    else if (k == "repetitions") p.repetitions = parse_count(k, v);
    else if (k == "significance") p.significance = parse_real(k, v);
    else if (k == "stratified") p.stratified = parse_bool(k, v);
    else if (k == "combine") p.npw.combine = parse_combine(v);
    else if (k == "clip_tau_path") p.npw.clip_tau_path = parse_bool(k, v);
    else if (k == "epsilon") p.npw.epsilon = parse_real(k, v);
    else if (k == "power_auc_a") config.power_auc_a = parse_real(k, v);
    else if (k == "power_auc_b") config.power_auc_b = parse_real(k, v);
    else if (k == "power_oracle_variance") config.power_oracle_variance = parse_real(k, v);
    else if (k == "protocol_deviation") {
      // informational, written into report provenance
    } else {
      throw UsageError("unknown config key '" + k + "'");
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError("config key '" + k + "': " + e.what());
  }
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto end = text.find('\n');
    auto line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw UsageError(line_error(line_no, "expected key = value"));
    apply_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config;
  apply_config_text(config, buffer.str());
  return config;
}

}  // namespace npw
