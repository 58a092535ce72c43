#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsel/common.hpp"

namespace evsel {

// Configuration for one CLI pipeline run. Serialized verbatim into the
// report for provenance; round-trips through JSON.
struct RunConfig {
  std::string input_path;
  std::string response;
  std::string group_column;       // non-empty switches the family to the mixed model
  std::string family = "auto";    // auto | ols | lmm
  bool intercept = false;
  bool intercept_candidate = false;  // let the intercept join the drop-one set

  std::string depth = "halfspace";  // halfspace | projection | mahalanobis
  int n_directions = 2000;

  std::string scheme = "gamma";  // gamma | moon
  int moon_m = 0;                // 0 = resample size defaults to the unit count
  // tau entries: "log" -> log n, a number k -> n^k, "=v" -> the value v.
  std::vector<std::string> taus = {"log"};

  int R = 1000;
  int R1 = 1000;
  std::string screen = "auto";  // auto | on | off
  int target_size = 0;          // 0 = default n - 1
  double validation_fraction = 0.25;
  std::vector<int> random_slope_cols;  // mixed model extras (0-based covariate indices)
  std::uint64_t seed = 1;
  std::string out_dir = "evsel_out";
  int threads = 0;  // 0 = library default
  bool export_ensemble = false;

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    if (input_path.empty()) throw config_error("config: input path is required");
    if (response.empty()) throw config_error("config: response column is required");
    if (family != "auto" && family != "ols" && family != "lmm")
      throw config_error("config: family must be auto|ols|lmm");
    if (family == "ols" && !group_column.empty())
      throw config_error("config: group column given but family forced to ols");
    if (depth != "halfspace" && depth != "projection" && depth != "mahalanobis")
      throw config_error("config: depth must be halfspace|projection|mahalanobis");
    if (n_directions < 1) throw config_error("config: n_directions must be >= 1");
    if (scheme != "gamma" && scheme != "moon")
      throw config_error("config: scheme must be gamma|moon");
    if (taus.empty()) throw config_error("config: tau grid must be nonempty");
    if (R < 2 || R1 < 2) throw config_error("config: R and R1 must be >= 2");
    if (screen != "auto" && screen != "on" && screen != "off")
      throw config_error("config: screen must be auto|on|off");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw config_error("config: validation fraction must lie in (0, 1)");
  }
};

// "log" -> log n; "k" -> n^k; "=v" -> v. The last form passes a value
// straight through, which is how mixed-model runs state tau = tau_n / sqrt(n).
inline double parse_tau_entry(const std::string& spec, Eigen::Index n) {
  try {
    if (spec == "log") return std::log(static_cast<double>(n));
    if (!spec.empty() && spec[0] == '=') {
      std::size_t used = 0;
      const double v = std::stod(spec.substr(1), &used);
      if (used != spec.size() - 1) throw std::invalid_argument("trailing");
      return v;
    }
    std::size_t used = 0;
    const double k = std::stod(spec, &used);
    if (used != spec.size()) throw std::invalid_argument("trailing");
    return std::pow(static_cast<double>(n), k);
  } catch (const std::exception&) {
    throw config_error("config: cannot parse tau entry '" + spec + "'");
  }
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"input_path", c.input_path},
                     {"response", c.response},
                     {"group_column", c.group_column},
                     {"family", c.family},
                     {"intercept", c.intercept},
                     {"intercept_candidate", c.intercept_candidate},
                     {"depth", c.depth},
                     {"n_directions", c.n_directions},
                     {"scheme", c.scheme},
                     {"moon_m", c.moon_m},
                     {"taus", c.taus},
                     {"R", c.R},
                     {"R1", c.R1},
                     {"screen", c.screen},
                     {"target_size", c.target_size},
                     {"validation_fraction", c.validation_fraction},
                     {"random_slope_cols", c.random_slope_cols},
                     {"seed", c.seed},
                     {"out_dir", c.out_dir},
                     {"threads", c.threads},
                     {"export_ensemble", c.export_ensemble}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  j.at("input_path").get_to(c.input_path);
  j.at("response").get_to(c.response);
  j.at("group_column").get_to(c.group_column);
  j.at("family").get_to(c.family);
  j.at("intercept").get_to(c.intercept);
  j.at("intercept_candidate").get_to(c.intercept_candidate);
  j.at("depth").get_to(c.depth);
  j.at("n_directions").get_to(c.n_directions);
  j.at("scheme").get_to(c.scheme);
  j.at("moon_m").get_to(c.moon_m);
  j.at("taus").get_to(c.taus);
  j.at("R").get_to(c.R);
  j.at("R1").get_to(c.R1);
  j.at("screen").get_to(c.screen);
  j.at("target_size").get_to(c.target_size);
  j.at("validation_fraction").get_to(c.validation_fraction);
  j.at("random_slope_cols").get_to(c.random_slope_cols);
  j.at("seed").get_to(c.seed);
  j.at("out_dir").get_to(c.out_dir);
  j.at("threads").get_to(c.threads);
  j.at("export_ensemble").get_to(c.export_ensemble);
}

// FNV-1a over the canonical JSON text; stable across runs and platforms.
inline std::string config_hash(const RunConfig& c) {
  nlohmann::json j = c;
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace evsel
