#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsel/bootstrap.hpp"
#include "evsel/evalues.hpp"
#include "evsel/io.hpp"
#include "evsel/model.hpp"
#include "evsel/report.hpp"
#include "evsel/runconfig.hpp"
#include "evsel/screening.hpp"
#include "evsel/sweep.hpp"
#include "evsel/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evsel {

struct RunResult {
  EvalueReport report;
  std::vector<TauSweepEntry> sweep;  // nonempty when a tau grid was swept
  int chosen_tau_index = -1;
  std::vector<std::string> selected_names;
  std::vector<int> screened_kept;  // original covariate indices after screening
  std::string summary;
  nlohmann::json report_json;
};

namespace detail {

inline DepthKind depth_from_config(const RunConfig& cfg) {
  DepthKind kind;
  if (cfg.depth == "mahalanobis") kind = DepthKind::mahalanobis();
  if (cfg.depth == "halfspace") kind = DepthKind::halfspace(cfg.n_directions);
  if (cfg.depth == "projection") kind = DepthKind::projection(cfg.n_directions);
  return kind;
}

inline WeightScheme scheme_from_config(const RunConfig& cfg, double tau, Eigen::Index units) {
  if (cfg.scheme == "moon") return WeightScheme::moon(cfg.moon_m > 0 ? cfg.moon_m : int(units));
  return WeightScheme::gamma(tau);
}

}  // namespace detail

// Orchestrates screen -> fit -> bootstrap -> e-values -> select -> artifacts.
// Exit codes: 0 success, 2 I/O failure, 3 configuration, 4 numerical.
inline RunResult run(const RunConfig& cfg) {
  cfg.validate();
  CsvTable table = read_csv_file(cfg.input_path);
  Dataset data = dataset_from_csv(table, cfg.response, cfg.group_column);

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  const bool lmm = cfg.family == "lmm" || (cfg.family == "auto" && data.has_groups());
  if (lmm && !data.has_groups())
    throw config_error("run: family lmm requires a group column");

  RunResult result;

  // stage: screening
  Dataset working = data;
  const bool want_screen =
      cfg.screen == "on" || (cfg.screen == "auto" && data.p() >= data.n());
  if (want_screen) {
    const int target =
        cfg.target_size > 0 ? cfg.target_size : static_cast<int>(data.n()) - 1;
    ScreenResult sr = sis_screen(data, target);
    result.screened_kept = sr.kept;
    working = sr.restrict(data);
  }

  // stage: fit
  ModelFit fit;
  LmmOptions lmm_opts;
  lmm_opts.random_slope_cols = cfg.random_slope_cols;
  if (lmm)
    fit = fit_lmm(working, lmm_opts);
  else
    fit = fit_ols(working, cfg.intercept);

  // stage: e-value selection (single tau or sweep)
  SelectConfig scfg;
  scfg.R = cfg.R;
  scfg.R1 = cfg.R1;
  scfg.kind = detail::depth_from_config(cfg);
  scfg.seed = cfg.seed;
  scfg.include_intercept = cfg.intercept_candidate;

  std::vector<double> taus;
  for (const auto& spec : cfg.taus) {
    double t = parse_tau_entry(spec, working.n());
    if (lmm && spec != "log" && spec[0] != '=')
      t /= std::sqrt(static_cast<double>(working.n()));  // grid notation: tau = tau_n/sqrt(n)
    taus.push_back(t);
  }

  if (taus.size() == 1) {
    scfg.scheme = detail::scheme_from_config(cfg, taus[0], fit.n_units());
    result.report = select(fit, scfg);
  } else {
    SweepOptions sweep_opts;
    sweep_opts.family = lmm ? ModelFamily::LinearMixedREML : ModelFamily::LinearOLS;
    sweep_opts.intercept = cfg.intercept;
    sweep_opts.lmm = lmm_opts;
    sweep_opts.base = scfg;
    sweep_opts.base.scheme = detail::scheme_from_config(cfg, taus[0], fit.n_units());
    sweep_opts.train_fraction = 1.0 - cfg.validation_fraction;
    TauSweepResult sw = tau_sweep(working, taus, sweep_opts);
    result.sweep = sw.entries;
    result.chosen_tau_index = sw.chosen;
    result.report = sw.best().report;
  }

  for (int s : result.report.selected)
    result.selected_names.push_back(result.report.names[s]);

  // provenance + artifacts
  nlohmann::json j = report_to_json(result.report);
  j["provenance"] = {{"library", "evsel"},
                     {"version", kVersion},
                     {"config", cfg},
                     {"config_hash", config_hash(cfg)},
                     {"seed", cfg.seed}};
  if (want_screen) j["screened_kept"] = result.screened_kept;
  if (!result.sweep.empty()) {
    nlohmann::json sj = nlohmann::json::array();
    for (const auto& e : result.sweep)
      sj.push_back({{"tau", e.tau},
                    {"validation_pe", e.validation_pe},
                    {"n_selected", e.report.selected.size()},
                    {"empty_selected", e.empty_selected}});
    j["tau_sweep"] = sj;
    j["chosen_tau"] = result.sweep[static_cast<std::size_t>(result.chosen_tau_index)].tau;
  }

  std::ostringstream summary;
  summary << "evsel selection report\n"
          << "  input: " << cfg.input_path << " (n=" << data.n() << ", p=" << data.p() << ")\n"
          << "  family: " << (lmm ? "linear mixed (REML)" : "linear (OLS)") << "\n"
          << "  depth: " << cfg.depth << ", scheme: " << cfg.scheme
          << ", R=" << cfg.R << ", R1=" << cfg.R1 << ", seed=" << cfg.seed << "\n";
  if (want_screen)
    summary << "  screening: kept " << result.screened_kept.size() << " of " << data.p()
            << " covariates\n";
  if (!result.sweep.empty())
    summary << "  tau sweep: chose tau=" << result.sweep[result.chosen_tau_index].tau
            << " by validation PE\n";
  summary << "  e-value(full) = " << result.report.e_full << "\n"
          << "  selected " << result.report.selected.size() << " covariate(s):";
  for (const auto& n : result.selected_names) summary << " " << n;
  summary << "\n";
  result.summary = summary.str();

  // write artifacts
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw io_error("run: cannot create output directory '" + cfg.out_dir + "'");

  {
    nlohmann::json full = j;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    // timestamp kept in its own field so reports stay byte-comparable without it
    full["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    std::ofstream f(fs::path(cfg.out_dir) / "report.json");
    if (!f) throw io_error("run: cannot write report.json");
    f << full.dump(2) << "\n";
  }
  {
    std::ofstream f(fs::path(cfg.out_dir) / "evalues.csv");
    if (!f) throw io_error("run: cannot write evalues.csv");
    write_evalue_csv(f, result.report);
  }
  if (cfg.export_ensemble) {
    SelectConfig ecfg = scfg;
    if (!result.sweep.empty())
      ecfg.scheme = detail::scheme_from_config(
          cfg, result.sweep[static_cast<std::size_t>(result.chosen_tau_index)].tau,
          fit.n_units());
    else
      ecfg.scheme = detail::scheme_from_config(cfg, taus[0], fit.n_units());
    BootstrapEnsemble ens =
        one_step_ensemble(fit, ecfg.scheme, cfg.R, mix_seed(cfg.seed, stream::kEnsembleT));
    std::ofstream f(fs::path(cfg.out_dir) / "ensemble.csv");
    if (!f) throw io_error("run: cannot write ensemble.csv");
    ens.write_csv(f);
  }
  {
    std::ofstream f(fs::path(cfg.out_dir) / "summary.txt");
    if (!f) throw io_error("run: cannot write summary.txt");
    f << result.summary;
  }
  result.report_json = std::move(j);
  return result;
}

}  // namespace evsel
