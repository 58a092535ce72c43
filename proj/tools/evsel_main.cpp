#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evsel/pipeline.hpp"
#include "evsel/tables.hpp"
#include "evsel/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

int run_command(const evsel::RunConfig& cfg) {
  evsel::RunResult result = evsel::run(cfg);
  std::cout << result.summary;
  std::cout << "artifacts written to " << cfg.out_dir << "/\n";
  return 0;
}

void write_linear_rows(std::ostream& os, const std::vector<evsel::LinearStudyRow>& rows) {
  os << "tau,sparsity,ref_sparsity,pe,ref_pe\n";
  for (const auto& r : rows)
    os << r.tau_label << "," << r.sparsity << "," << r.ref_sparsity << "," << r.pe << ","
       << r.ref_pe << "\n";
}

void write_mixed_rows(std::ostream& os, const std::vector<evsel::MixedStudyRow>& rows,
                      bool correct_only) {
  if (correct_only) {
    os << "tau,correct_pct,ref_correct_pct\n";
    for (const auto& r : rows) os << r.tau << "," << r.correct_pct << "," << r.ref_correct << "\n";
  } else {
    os << "tau,fpr_pct,ref_fpr_pct,fnr_pct,ref_fnr_pct,model_size,ref_model_size\n";
    for (const auto& r : rows)
      os << r.tau << "," << r.fpr_pct << "," << r.ref_fpr << "," << r.fnr_pct << ","
         << r.ref_fnr << "," << r.model_size << "," << r.ref_size << "\n";
  }
}

int simulate_command(const std::string& table, const std::string& scale, std::uint64_t seed,
                     const std::string& out_dir, int replicates_override, int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw evsel::io_error("simulate: cannot create output directory '" + out_dir + "'");
  const bool full = scale == "full";

  std::ostringstream table_text;
  if (table == "t1s1" || table == "t1s2") {
    evsel::LinearStudyConfig cfg;
    cfg.setting = table == "t1s1" ? 1 : 2;
    cfg.rho = 0.5;
    cfg.tau_labels = {"log", "0.1", "0.2", "0.3", "0.4"};
    cfg.replicates = replicates_override > 0 ? replicates_override : (full ? 100 : 30);
    cfg.seed = seed;
    auto rows = evsel::run_linear_study(cfg);
    write_linear_rows(table_text, rows);
  } else if (table == "t2" || table == "t3") {
    evsel::MixedStudyConfig cfg;
    cfg.setting = 2;
    cfg.taus = table == "t2" ? std::vector<double>{3, 4, 5, 6, 7, 8}
                             : std::vector<double>{4, 5, 6, 7, 8, 9, 10};
    cfg.replicates = replicates_override > 0 ? replicates_override : (full ? 100 : 50);
    cfg.seed = seed;
    auto rows = evsel::run_mixed_study(cfg);
    write_mixed_rows(table_text, rows, table == "t3");
  } else {
    throw evsel::config_error("simulate: unknown table id '" + table +
                              "' (expected t1s1|t1s2|t2|t3)");
  }

  std::cout << table_text.str();
  std::ofstream f(fs::path(out_dir) / (table + "_summary.csv"));
  if (!f) throw evsel::io_error("simulate: cannot write summary");
  f << table_text.str();
  std::cout << "summary written to " << out_dir << "/" << table << "_summary.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evsel: best subset selection by bootstrap e-values"};
  app.set_version_flag("--version", evsel::kVersion);
  app.require_subcommand(1);

  evsel::RunConfig cfg;
  std::string tau_single, tau_grid;
  auto* run = app.add_subcommand("run", "select covariates for one dataset");
  run->add_option("--input", cfg.input_path, "input CSV with a header row")->required();
  run->add_option("--response", cfg.response, "response column name")->required();
  run->add_option("--group", cfg.group_column, "group column (enables the mixed model)");
  run->add_option("--family", cfg.family, "auto|ols|lmm")->capture_default_str();
  run->add_flag("--intercept", cfg.intercept, "fit an intercept term");
  run->add_flag("--intercept-candidate", cfg.intercept_candidate,
                "let the intercept join the drop-one candidates");
  run->add_option("--depth", cfg.depth, "halfspace|projection|mahalanobis")
      ->capture_default_str();
  run->add_option("--n-directions", cfg.n_directions, "sampled depth directions")
      ->capture_default_str();
  run->add_option("--scheme", cfg.scheme, "gamma|moon resampling weights")
      ->capture_default_str();
  run->add_option("--moon-m", cfg.moon_m, "moon bootstrap resample size");
  run->add_option("--tau", tau_single, "single tau value (taken literally)");
  run->add_option("--tau-grid", tau_grid,
                  "comma list; 'log' means log n, a number k means n^k");
  run->add_option("--r", cfg.R, "bootstrap size for the reference cloud")->capture_default_str();
  run->add_option("--r1", cfg.R1, "bootstrap size for the scored draws")->capture_default_str();
  run->add_option("--screen", cfg.screen, "auto|on|off sure-independence screening")
      ->capture_default_str();
  run->add_option("--target-size", cfg.target_size, "screened set size (default n-1)");
  run->add_option("--validation-fraction", cfg.validation_fraction,
                  "held-out fraction for the tau sweep")
      ->capture_default_str();
  run->add_option("--random-slopes", cfg.random_slope_cols,
                  "covariate indices carrying random slopes (0-based)");
  run->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  run->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  run->add_option("--threads", cfg.threads, "worker cap (0 = default)");
  run->add_flag("--ensemble-csv", cfg.export_ensemble, "also write ensemble.csv");

  std::string table, scale = "desk", sim_out = "evsel_sim";
  std::uint64_t sim_seed = 1;
  int sim_reps = 0, sim_threads = 0;
  auto* sim = app.add_subcommand("simulate", "reproduce a study table");
  sim->add_option("--table", table, "t1s1|t1s2|t2|t3")->required();
  sim->add_option("--scale", scale, "desk|full")->capture_default_str();
  sim->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
  sim->add_option("--replicates", sim_reps, "override the replicate count");
  sim->add_option("--out", sim_out, "output directory")->capture_default_str();
  sim->add_option("--threads", sim_threads, "worker cap (0 = default)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!tau_single.empty() && !tau_grid.empty())
        throw evsel::config_error("config: give either --tau or --tau-grid, not both");
      if (!tau_single.empty()) cfg.taus = {"=" + tau_single};
      if (!tau_grid.empty()) cfg.taus = split_commas(tau_grid);
      return run_command(cfg);
    }
    if (scale != "desk" && scale != "full")
      throw evsel::config_error("simulate: scale must be desk|full");
    return simulate_command(table, scale, sim_seed, sim_out, sim_reps, sim_threads);
  } catch (const evsel::io_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return 2;
  } catch (const evsel::config_error& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 3;
  } catch (const evsel::numeric_error& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
