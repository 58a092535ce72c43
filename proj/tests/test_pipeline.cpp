#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "evsel/pipeline.hpp"
#include "evsel/sweep.hpp"

using namespace evsel;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("evsel_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// y = 5 x1 + noise with a spectator covariate
fs::path write_strong_signal_csv(const fs::path& dir, int n = 400, std::uint64_t seed = 3) {
  auto rng = std::mt19937_64(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  fs::path file = dir / "toy.csv";
  std::ofstream f(file);
  f << "y,x1,x2\n";
  for (int i = 0; i < n; ++i) {
    const double x1 = g(rng), x2 = g(rng);
    f << 5.0 * x1 + g(rng) << "," << x1 << "," << x2 << "\n";
  }
  return file;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  nlohmann::json j;
  f >> j;
  return j;
}

}  // namespace

TEST_CASE("the pipeline selects the strong covariate end to end", "[pipeline]") {
  fs::path dir = temp_dir("smoke");
  fs::path csv = write_strong_signal_csv(dir);
  RunConfig cfg;
  cfg.input_path = csv.string();
  cfg.response = "y";
  cfg.taus = {"log"};
  cfg.R = 400;
  cfg.R1 = 400;
  cfg.n_directions = 800;
  cfg.seed = 11;
  cfg.out_dir = (dir / "out").string();
  cfg.export_ensemble = true;

  RunResult res = run(cfg);
  REQUIRE(res.selected_names == std::vector<std::string>{"x1"});
  REQUIRE(fs::exists(dir / "out" / "report.json"));
  REQUIRE(fs::exists(dir / "out" / "evalues.csv"));
  REQUIRE(fs::exists(dir / "out" / "ensemble.csv"));
  REQUIRE(fs::exists(dir / "out" / "summary.txt"));

  nlohmann::json j = read_json(dir / "out" / "report.json");
  REQUIRE(j["selected_names"] == nlohmann::json::array({"x1"}));
  REQUIRE(j["provenance"]["config_hash"] == config_hash(cfg));
  REQUIRE(j.contains("timestamp_unix_ms"));
}

TEST_CASE("reports are byte-identical modulo the timestamp field", "[pipeline]") {
  fs::path dir = temp_dir("determinism");
  fs::path csv = write_strong_signal_csv(dir);
  RunConfig cfg;
  cfg.input_path = csv.string();
  cfg.response = "y";
  cfg.taus = {"log"};
  cfg.R = 300;
  cfg.R1 = 300;
  cfg.seed = 21;
  cfg.out_dir = (dir / "out").string();

  auto read_report_sans_timestamp = [&](const fs::path& p) {
    std::ifstream f(p);
    std::string text, line;
    while (std::getline(f, line)) {
      if (line.find("timestamp_unix_ms") != std::string::npos) continue;
      text += line;
      text += '\n';
    }
    return text;
  };

  run(cfg);
  const std::string report_a = read_report_sans_timestamp(dir / "out" / "report.json");
  std::ifstream fa(dir / "out" / "evalues.csv");
  std::stringstream sa;
  sa << fa.rdbuf();

  run(cfg);  // same config, same out dir, fresh process state
  const std::string report_b = read_report_sans_timestamp(dir / "out" / "report.json");
  std::ifstream fb(dir / "out" / "evalues.csv");
  std::stringstream sb;
  sb << fb.rdbuf();

  REQUIRE(report_a == report_b);
  REQUIRE(sa.str() == sb.str());
}

TEST_CASE("missing columns exit through the config error path", "[pipeline]") {
  fs::path dir = temp_dir("badcol");
  fs::path csv = write_strong_signal_csv(dir);
  RunConfig cfg;
  cfg.input_path = csv.string();
  cfg.response = "no_such_column";
  cfg.out_dir = (dir / "out").string();
  try {
    run(cfg);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    REQUIRE(std::string(e.what()).find("no_such_column") != std::string::npos);
  }
  RunConfig io_bad = cfg;
  io_bad.response = "y";
  io_bad.input_path = (dir / "missing.csv").string();
  REQUIRE_THROWS_AS(run(io_bad), io_error);
}

TEST_CASE("the tau sweep picks a workable tau and reports PE per entry", "[pipeline]") {
  fs::path dir = temp_dir("sweep");
  fs::path csv = write_strong_signal_csv(dir, 600);
  RunConfig cfg;
  cfg.input_path = csv.string();
  cfg.response = "y";
  cfg.taus = {"log", "0.4"};
  cfg.R = 300;
  cfg.R1 = 300;
  cfg.n_directions = 600;
  cfg.seed = 31;
  cfg.validation_fraction = 0.25;
  cfg.out_dir = (dir / "out").string();

  RunResult res = run(cfg);
  REQUIRE(res.sweep.size() == 2);
  REQUIRE(res.chosen_tau_index >= 0);
  REQUIRE(res.selected_names == std::vector<std::string>{"x1"});
  nlohmann::json j = read_json(dir / "out" / "report.json");
  REQUIRE(j["tau_sweep"].size() == 2);
  REQUIRE(j.contains("chosen_tau"));
}

TEST_CASE("tau sweep ties break toward the smaller tau", "[pipeline]") {
  // all-noise covariates: both taus select nothing, so PEs tie exactly
  auto rng = std::mt19937_64(5);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d;
  d.X.resize(300, 3);
  d.y.resize(300);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 3; ++j) d.X(i, j) = g(rng);
    d.y[i] = g(rng);
  }
  SweepOptions opts;
  opts.base.R = 200;
  opts.base.R1 = 200;
  opts.base.kind = DepthKind::halfspace(300);
  opts.base.seed = 17;
  TauSweepResult sw = tau_sweep(d, {9.0, 3.0, 6.0}, opts);
  REQUIRE(sw.entries.size() == 3);
  bool all_empty = true;
  for (const auto& e : sw.entries) all_empty = all_empty && e.empty_selected;
  if (all_empty) {
    REQUIRE(sw.best().tau == 3.0);
  }
  REQUIRE_THROWS_AS(tau_sweep(d, {}, opts), config_error);
}

TEST_CASE("single tau sweeps choose trivially", "[pipeline]") {
  fs::path dir = temp_dir("single");
  fs::path csv = write_strong_signal_csv(dir, 300);
  CsvTable t = read_csv_file(csv.string());
  Dataset d = dataset_from_csv(t, "y");
  SweepOptions opts;
  opts.base.R = 200;
  opts.base.R1 = 200;
  opts.base.seed = 3;
  TauSweepResult sw = tau_sweep(d, {5.0}, opts);
  REQUIRE(sw.entries.size() == 1);
  REQUIRE(sw.chosen == 0);
}

TEST_CASE("the mixed pipeline runs with a group column", "[pipeline]") {
  fs::path dir = temp_dir("lmm");
  auto rng = std::mt19937_64(7);
  std::normal_distribution<double> g(0.0, 1.0);
  fs::path file = dir / "grouped.csv";
  {
    std::ofstream f(file);
    f << "y,x1,x2,site\n";
    for (int grp = 0; grp < 25; ++grp) {
      const double u = 1.5 * g(rng);
      for (int i = 0; i < 8; ++i) {
        const double x1 = g(rng), x2 = g(rng);
        f << 3.0 * x1 + u + g(rng) << "," << x1 << "," << x2 << ",s" << grp << "\n";
      }
    }
  }
  RunConfig cfg;
  cfg.input_path = file.string();
  cfg.response = "y";
  cfg.group_column = "site";
  cfg.taus = {"=5"};
  cfg.R = 300;
  cfg.R1 = 300;
  cfg.seed = 13;
  cfg.out_dir = (dir / "out").string();
  RunResult res = run(cfg);
  REQUIRE(res.selected_names == std::vector<std::string>{"x1"});
}
