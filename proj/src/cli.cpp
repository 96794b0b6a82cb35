#include "npw/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "npw/dgp.hpp"
#include "npw/error.hpp"
#include "npw/estimators.hpp"
#include "npw/harness.hpp"
#include "npw/io.hpp"
#include "npw/metrics.hpp"
#include "npw/nuisance.hpp"
#include "npw/theory.hpp"

namespace npw {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 20261016;

struct GlobalOptions {
  std::uint64_t seed = kDefaultSeed;
  std::string tie = "strict";
  std::string pi;
  std::size_t folds = 5;
  std::string out;
  std::string format = "json";
  std::string config;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* pi_opt = nullptr;
  CLI::Option* tie_opt = nullptr;
};

struct SweepFlags {
  std::size_t replications = 0;
  std::size_t n = 0;
  std::vector<double> ate;
  std::vector<double> noise;
  std::string nuisance;
  std::vector<std::string> estimators;
  std::string outcome_mode;
  std::string truth;
  std::string tau_form;
  std::size_t pool_size = 0;
  unsigned threads = 0;
};

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& name : names) {
    std::stringstream ss(name);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(parse_method(item));
    }
  }
  return out;
}

std::string emit_json(const ordered_json& j) { return j.dump(2) + "\n"; }

void deliver(const GlobalOptions& g, const std::string& text, std::ostream& out) {
  if (g.out.empty()) {
    out << text;
  } else {
    write_file_atomic(g.out, text);
  }
}

RunConfig base_config(const GlobalOptions& g) {
  RunConfig config = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.config.empty() || g.seed_opt->count() > 0) {
    config.sweep.dgp.seed = g.seed;
    config.sweep.base_seed = g.seed;
    config.power.base_seed = g.seed;
  }
  if (g.tie_opt->count() > 0) config.sweep.tie = config.power.npw.tie = parse_tie(g.tie);
  if (g.folds_opt->count() > 0) config.sweep.folds = g.folds;
  if (g.pi_opt->count() > 0) {
    const auto pi = PiSource::parse(g.pi);
    if (!pi.value) throw UsageError("--pi empirical applies to data files only");
    config.sweep.dgp.pi = *pi.value;
  }
  return config;
}

void apply_sweep_flags(SweepConfig& s, const SweepFlags& f) {
  if (f.replications > 0) s.replications = f.replications;
  if (f.n > 0) s.n_rct = f.n;
  if (!f.ate.empty()) s.ate_grid = f.ate;
  if (!f.noise.empty()) s.noise_grid = f.noise;
  if (!f.nuisance.empty()) s.nuisance_mode = parse_nuisance_mode(f.nuisance);
  if (!f.estimators.empty()) s.estimator_set = parse_methods(f.estimators);
  if (!f.outcome_mode.empty()) s.outcome_mode = parse_outcome_mode(f.outcome_mode);
  if (!f.truth.empty()) s.dgp.truth = parse_truth_convention(f.truth);
  if (!f.tau_form.empty()) s.dgp.tau_form = parse_tau_form(f.tau_form);
  if (f.pool_size > 0) s.dgp.pool_size = f.pool_size;
  if (f.threads > 0) s.threads = f.threads;
}

void add_sweep_flags(CLI::App* cmd, SweepFlags& f) {
  cmd->add_option("--replications", f.replications, "Replicates per setting");
  cmd->add_option("--n", f.n, "Trial size per replicate");
  cmd->add_option("--ate", f.ate, "Average treatment effects")->delimiter(',');
  cmd->add_option("--noise", f.noise, "Oracle nuisance noise variances")->delimiter(',');
  cmd->add_option("--nuisance", f.nuisance, "oracle_noisy or cross_fit");
  cmd->add_option("--estimators", f.estimators, "Estimators, comma separated");
  cmd->add_option("--outcome-mode", f.outcome_mode, "pool or redraw");
  cmd->add_option("--truth", f.truth, "whole_pool, control_half or expected");
  cmd->add_option("--tau-form", f.tau_form, "printed or sigmoid");
  cmd->add_option("--pool-size", f.pool_size, "Synthetic pool size");
  cmd->add_option("--threads", f.threads, "Worker threads (0: all cores)");
}

// Nuisance estimates for a loaded file: supplied columns first, else
// cross-fitting on the feature columns.
std::optional<NuisanceEstimates> file_nuisance(const LoadedData& data, const GlobalOptions& g,
                                               bool required, std::string& source) {
  if (data.nuisance) {
    source = "supplied";
    return data.nuisance;
  }
  if (!required) {
    source = "none";
    return std::nullopt;
  }
  if (data.dataset.features.cols() == 0) {
    throw DataError("nuisance estimates need omega_hat and tau_hat columns or x_ feature columns");
  }
  CrossFitConfig cf;
  cf.folds = g.folds;
  cf.seed = derive_seed(g.seed, 0);
  source = "cross_fit";
  return cross_fit_nuisance(data.dataset, cf).nuisance;
}

ordered_json estimate_json(const AucEstimate& e, const std::string& model) {
  ordered_json j;
  j["model"] = model;
  j["method"] = std::string(to_string(e.method));
  j["value"] = e.value;
  j["n_control"] = e.n_control;
  j["n_treated"] = e.n_treated;
  ordered_json diag = ordered_json::object();
  for (const auto& [k, v] : e.diagnostics) diag[k] = std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
  j["diagnostics"] = diag;
  return j;
}

LoadedData load_for_cli(const std::string& path, const GlobalOptions& g) {
  if (g.pi.empty()) throw UsageError("--pi is required for data files (a value or 'empirical')");
  auto data = load_csv(path, PiSource::parse(g.pi));
  require_valid(data.dataset);
  if (data.scores.empty()) throw DataError("no score__<name> columns in '" + path + "'");
  for (const auto& s : data.scores) check_scores(data.dataset, s);
  return data;
}

int cmd_estimate(const GlobalOptions& g, const std::string& path, const std::vector<std::string>& method_names,
                 const std::string& combine, bool clip_tau, std::ostream& out) {
  const auto data = load_for_cli(path, g);
  const auto methods = parse_methods(method_names);
  const bool need = std::any_of(methods.begin(), methods.end(), needs_nuisance);
  std::string source;
  const auto nuisance = file_nuisance(data, g, need, source);
  NpwConfig npw;
  npw.tie = parse_tie(g.tie);
  npw.combine = parse_combine(combine);
  npw.clip_tau_path = clip_tau;

  ordered_json j;
  j["n"] = data.dataset.size();
  j["pi"] = data.dataset.randomization_prob;
  j["tie"] = g.tie;
  j["nuisance"] = source;
  j["estimates"] = ordered_json::array();
  for (const auto& scores : data.scores) {
    for (auto m : methods) {
      const auto e = estimate(m, data.dataset, scores, nuisance ? &*nuisance : nullptr, npw);
      j["estimates"].push_back(estimate_json(e, scores.model_name));
    }
  }
  deliver(g, emit_json(j), out);
  return 0;
}

int cmd_select(const GlobalOptions& g, const std::string& path, const std::string& method_name,
               std::ostream& out) {
  const auto data = load_for_cli(path, g);
  const Method method = parse_method(method_name);
  const bool naive = method == Method::naive;
  std::string source;
  const auto nuisance = file_nuisance(data, g, needs_nuisance(method) || naive, source);
  NpwConfig npw;
  npw.tie = parse_tie(g.tie);

  struct Entry {
    std::string model;
    double value;
    double sigma;
  };
  std::vector<Entry> entries;
  for (const auto& scores : data.scores) {
    const auto e = estimate(method, data.dataset, scores, nuisance ? &*nuisance : nullptr, npw);
    double sigma = std::numeric_limits<double>::quiet_NaN();
    if (naive) {
      // Plug-in covariance of the CATE with the score CDF over all samples.
      const auto cdf = empirical_cdf(scores.scores, scores.scores, Tie::half);
      sigma = sigma_f(nuisance->tau_hat, cdf);
    }
    entries.push_back({scores.model_name, e.value, sigma});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.value > b.value; });

  ordered_json j;
  j["method"] = std::string(to_string(method));
  j["nuisance"] = source;
  j["selected"] = entries.front().model;
  j["ranking"] = ordered_json::array();
  for (const auto& e : entries) j["ranking"].push_back({{"model", e.model}, {"estimate", e.value}});
  if (naive) {
    const PopulationParams params(data.dataset.randomization_prob, nuisance->mu0_hat, nuisance->mu1_hat);
    const double beta = bias_params(params).beta;
    j["beta"] = beta;
    j["misselection"] = ordered_json::array();
    for (std::size_t a = 0; a < entries.size(); ++a) {
      for (std::size_t b = a + 1; b < entries.size(); ++b) {
        if (!(entries[a].value > entries[b].value)) continue;
        const bool flag =
            misselection_condition(entries[a].value, entries[b].value, beta, entries[a].sigma, entries[b].sigma);
        j["misselection"].push_back({{"preferred", entries[a].model}, {"other", entries[b].model}, {"flag", flag}});
      }
    }
  }
  deliver(g, emit_json(j), out);
  return 0;
}

int cmd_simulate(const GlobalOptions& g, RunConfig config, double delta, std::size_t n, std::size_t dim,
                 const SweepFlags& flags, bool spectrum, double oracle_noise, CLI::Option* noise_opt,
                 std::ostream& out) {
  auto& s = config.sweep;
  apply_sweep_flags(s, flags);
  s.dgp.delta = delta;
  if (dim > 0) s.dgp.dim = dim;
  s.validate();
  const auto pool = gen_pool(s.dgp);
  Rng rng(derive_seed(s.dgp.seed, 2));
  RctSample sample;
  if (n == 0) {
    sample.dataset = pool_as_dataset(pool, s.dgp.pi);
    sample.pool_index.resize(pool.size());
    std::iota(sample.pool_index.begin(), sample.pool_index.end(), std::size_t{0});
  } else {
    sample = subsample_rct(pool, n, s.dgp.pi, rng);
  }
  const auto& idx = sample.pool_index;

  DatasetColumns columns;
  columns.dataset = &sample.dataset;
  if (spectrum) {
    Rng spectrum_rng(derive_seed(s.dgp.seed, 1));
    for (const auto& m : gen_model_spectrum(pool, s.training_sizes, spectrum_rng, s.spectrum_learner, s.tie)) {
      columns.scores.push_back(take_scores(m.score_set, idx));
    }
  }
  std::optional<NuisanceEstimates> nuisance;
  if (noise_opt->count() > 0) {
    std::vector<double> omega;
    std::vector<double> tau;
    for (auto i : idx) {
      omega.push_back(pool.omega_true[i]);
      tau.push_back(pool.tau_effective[i]);
    }
    Rng noise_rng(derive_seed(s.dgp.seed, 3));
    const auto draw = noisy_oracle_draw(omega, tau, oracle_noise, noise_rng);
    nuisance = make_nuisance(sample.dataset, draw.omega_hat, draw.tau_hat);
    columns.nuisance = &*nuisance;
  }
  PoolColumns pc;
  for (auto i : idx) {
    pc.y0.push_back(pool.y0[i]);
    pc.y1.push_back(pool.y1[i]);
    pc.omega_true.push_back(pool.omega_true[i]);
    pc.tau_true.push_back(pool.tau_true[i]);
    pc.tau_effective.push_back(pool.tau_effective[i]);
  }
  columns.pool = &pc;
  std::ostringstream text;
  write_dataset_csv(text, columns);
  deliver(g, text.str(), out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate AUROC without intervention from randomized trial data", "npw"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  g.tie_opt = app.add_option("--tie", g.tie, "Tied pairs: strict or half")->capture_default_str();
  g.pi_opt = app.add_option("--pi", g.pi, "Randomization probability or 'empirical'");
  g.folds_opt = app.add_option("--folds", g.folds, "Cross-fitting folds")->capture_default_str();
  app.add_option("--out", g.out, "Write the result to this file");
  app.add_option("--format", g.format, "Report format: json or csv")->capture_default_str();
  app.add_option("--config", g.config, "key = value run configuration file");

  auto* est = app.add_subcommand("estimate", "AUROC estimates for each score column of a CSV");
  std::string est_path;
  std::vector<std::string> est_methods{"standard,naive,npw"};
  std::string combine = "average";
  bool clip_tau = false;
  est->add_option("data", est_path, "Trial CSV")->required();
  est->add_option("--method", est_methods, "Estimators, comma separated");
  est->add_option("--combine", combine, "average, omega_only or tau_only")->capture_default_str();
  est->add_flag("--clip-tau", clip_tau, "Clip the tau-path estimate into [0,1]");

  auto* sim = app.add_subcommand("simulate", "Write a synthetic trial CSV");
  double sim_delta = 0.0;
  std::size_t sim_n = 200;
  std::size_t sim_dim = 0;
  bool sim_spectrum = false;
  double sim_noise = 0.01;
  SweepFlags sim_flags;
  sim->add_option("--delta", sim_delta, "Average treatment effect")->capture_default_str();
  sim->add_option("--n", sim_n, "Rows to sample from the pool (0: whole pool)")->capture_default_str();
  sim->add_option("--dim", sim_dim, "Feature dimension");
  sim->add_option("--pool-size", sim_flags.pool_size, "Synthetic pool size");
  sim->add_option("--tau-form", sim_flags.tau_form, "printed or sigmoid");
  sim->add_flag("--spectrum", sim_spectrum, "Add score columns for the model spectrum");
  auto* sim_noise_opt = sim->add_option("--oracle-noise", sim_noise, "Add noisy oracle omega_hat/tau_hat columns");

  auto* mae_cmd = app.add_subcommand("sweep-mae", "MAE of each estimator across the model spectrum");
  SweepFlags mae_flags;
  add_sweep_flags(mae_cmd, mae_flags);
  auto* cidx_cmd = app.add_subcommand("sweep-cindex", "Ranking agreement with the true AUCs");
  SweepFlags cidx_flags;
  add_sweep_flags(cidx_cmd, cidx_flags);
  auto* bias_cmd = app.add_subcommand("bias-check", "Empirical against predicted estimator error");
  SweepFlags bias_flags;
  std::optional<std::size_t> model_index;
  add_sweep_flags(bias_cmd, bias_flags);
  bias_cmd->add_option("--model-index", model_index, "Spectrum model (default: middle)");

  auto* power_cmd = app.add_subcommand("power", "Bootstrap test power for comparing two models");
  std::vector<std::size_t> n_grid;
  std::size_t bootstrap = 0;
  std::size_t repetitions = 0;
  std::optional<double> auc_a;
  std::optional<double> auc_b;
  bool stratified = false;
  std::string power_data;
  std::string score_a;
  std::string score_b;
  SweepFlags power_flags;
  power_cmd->add_option("--n-grid", n_grid, "Sample sizes")->delimiter(',');
  power_cmd->add_option("--bootstrap", bootstrap, "Bootstrap draws per test");
  power_cmd->add_option("--repetitions", repetitions, "Repetitions per sample size");
  power_cmd->add_option("--auc-a", auc_a, "True AUC of the first synthetic model");
  power_cmd->add_option("--auc-b", auc_b, "True AUC of the second synthetic model");
  power_cmd->add_flag("--stratified", stratified, "Resample within arms");
  power_cmd->add_option("--data", power_data, "Trial CSV instead of the synthetic pool");
  power_cmd->add_option("--score-a", score_a, "Score column of the first model (with --data)");
  power_cmd->add_option("--score-b", score_b, "Score column of the second model (with --data)");
  power_cmd->add_option("--estimators", power_flags.estimators, "Estimators, comma separated");
  power_cmd->add_option("--delta", power_flags.ate, "Average treatment effect")->delimiter(',');
  power_cmd->add_option("--noise", power_flags.noise, "Oracle nuisance noise variance")->delimiter(',');
  power_cmd->add_option("--outcome-mode", power_flags.outcome_mode, "pool or redraw");
  power_cmd->add_option("--pool-size", power_flags.pool_size, "Synthetic pool size");
  power_cmd->add_option("--threads", power_flags.threads, "Worker threads (0: all cores)");

  auto* select_cmd = app.add_subcommand("select", "Rank the score columns of a CSV by estimated AUROC");
  std::string select_path;
  std::string select_method = "npw";
  select_cmd->add_option("data", select_path, "Trial CSV")->required();
  select_cmd->add_option("--method", select_method, "Estimator used for ranking")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    const auto format = parse_report_format(g.format);
    parse_tie(g.tie);
    const auto write = [&](const ExperimentReport& report) { deliver(g, render_report(report, format), out); };

    if (est->parsed()) return cmd_estimate(g, est_path, est_methods, combine, clip_tau, out);
    if (select_cmd->parsed()) return cmd_select(g, select_path, select_method, out);
    auto config = base_config(g);
    if (sim->parsed()) {
      return cmd_simulate(g, config, sim_delta, sim_n, sim_dim, sim_flags, sim_spectrum, sim_noise, sim_noise_opt,
                          out);
    }
    if (mae_cmd->parsed()) {
      apply_sweep_flags(config.sweep, mae_flags);
      write(run_mae_sweep(config.sweep));
      return 0;
    }
    if (cidx_cmd->parsed()) {
      apply_sweep_flags(config.sweep, cidx_flags);
      write(run_cindex_sweep(config.sweep));
      return 0;
    }
    if (bias_cmd->parsed()) {
      auto& s = config.sweep;
      if (bias_flags.estimators.empty()) {
        s.estimator_set = {Method::naive,  Method::standard,       Method::treated,     Method::all_data,
                           Method::npw,    Method::npw_omega_only, Method::npw_tau_only};
      }
      apply_sweep_flags(s, bias_flags);
      s.dgp.delta = s.ate_grid.front();
      s.validate();
      const auto world = make_world(s, s.ate_grid.front());
      const std::size_t k = model_index.value_or(world.models.size() / 2);
      if (k >= world.models.size()) throw UsageError("--model-index out of range");
      const auto result = run_bias_check(s, world.pool, world.models[k].score_set, s.estimator_set);
      write(bias_report(result, s));
      return 0;
    }
    if (power_cmd->parsed()) {
      auto& p = config.power;
      if (!n_grid.empty()) p.n_grid = n_grid;
      if (bootstrap > 0) p.bootstrap_samples = bootstrap;
      if (repetitions > 0) p.repetitions = repetitions;
      if (stratified) p.stratified = true;
      if (!power_flags.estimators.empty()) p.methods = parse_methods(power_flags.estimators);
      if (power_flags.threads > 0) p.threads = power_flags.threads;
      p.validate();
      if (!power_data.empty()) {
        const auto data = load_for_cli(power_data, g);
        const auto find = [&](const std::string& name) {
          for (const auto& s : data.scores) {
            if (s.model_name == name) return s;
          }
          throw UsageError("no score column 'score__" + name + "'");
        };
        if (score_a.empty() || score_b.empty()) throw UsageError("--data needs --score-a and --score-b");
        CrossFitConfig cf;
        cf.folds = config.sweep.folds;
        cf.seed = derive_seed(p.base_seed, 0);
        auto source = dataset_power_source(data.dataset, find(score_a), find(score_b), data.nuisance, cf);
        write(power_report(run_power(source, p), p.base_seed));
        return 0;
      }
      auto& s = config.sweep;
      apply_sweep_flags(s, power_flags);
      s.dgp.delta = s.ate_grid.front();
      if (!power_flags.noise.empty()) config.power_oracle_variance = power_flags.noise.front();
      if (auc_a) config.power_auc_a = *auc_a;
      if (auc_b) config.power_auc_b = *auc_b;
      s.dgp.validate();
      const auto pool = gen_pool(s.dgp);
      auto [a, b] = make_score_pair(pool, config.power_auc_a, config.power_auc_b, s.dgp.seed, p.npw.tie);
      auto source = synthetic_power_source(pool, a, b, s.dgp.pi, config.power_oracle_variance, s.outcome_mode);
      auto report = power_report(run_power(source, p), p.base_seed);
      report.provenance["delta"] = format_number(s.dgp.delta);
      report.provenance["dgp_seed"] = std::to_string(s.dgp.seed);
      report.provenance["pool_size"] = std::to_string(s.dgp.pool_size);
      report.provenance["power_auc_a"] = format_number(config.power_auc_a);
      report.provenance["power_auc_b"] = format_number(config.power_auc_b);
      report.provenance["power_true_auc_a"] = format_number(true_auc(pool, a.scores, p.npw.tie));
      report.provenance["power_true_auc_b"] = format_number(true_auc(pool, b.scores, p.npw.tie));
      report.provenance["power_oracle_variance"] = format_number(config.power_oracle_variance);
      report.provenance["outcome_mode"] = std::string(to_string(s.outcome_mode));
      write(report);
      return 0;
    }
    throw UsageError("no command given");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  }
}

}  // namespace npw
