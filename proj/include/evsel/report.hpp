#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsel/evalues.hpp"
#include "evsel/io.hpp"

namespace evsel {

// Ascending e-value table with the full model as the "none" row.
struct EvalueTableRow {
  std::string label;  // "- name" for drop-one rows, "none" for the full model
  double evalue = 0.0;
  bool is_full = false;
};

inline std::vector<EvalueTableRow> evalue_table(const EvalueReport& rep) {
  std::vector<EvalueTableRow> rows;
  rows.push_back({"none", rep.e_full, true});
  for (int j : rep.candidates) {
    const std::string name =
        j < static_cast<int>(rep.names.size()) ? rep.names[j] : "x" + std::to_string(j + 1);
    rows.push_back({"- " + name, rep.e_dropped[j], false});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EvalueTableRow& a, const EvalueTableRow& b) {
                     return a.evalue < b.evalue;
                   });
  return rows;
}

inline void write_evalue_csv(std::ostream& os, const EvalueReport& rep) {
  os << "model,evalue\n";
  for (const auto& row : evalue_table(rep))
    os << row.label << "," << format_double(row.evalue) << "\n";
}

inline nlohmann::json report_to_json(const EvalueReport& rep) {
  nlohmann::json j;
  j["e_full"] = rep.e_full;
  nlohmann::json dropped = nlohmann::json::array();
  for (Eigen::Index k = 0; k < rep.e_dropped.size(); ++k) {
    if (std::isnan(rep.e_dropped[k]))
      dropped.push_back(nullptr);
    else
      dropped.push_back(rep.e_dropped[k]);
  }
  j["e_dropped"] = dropped;
  j["selected"] = rep.selected;
  std::vector<std::string> sel_names;
  for (int s : rep.selected)
    sel_names.push_back(s < static_cast<int>(rep.names.size()) ? rep.names[s]
                                                               : "x" + std::to_string(s + 1));
  j["selected_names"] = sel_names;
  j["candidates"] = rep.candidates;
  j["names"] = rep.names;
  j["tau_n"] = rep.tau_n;
  j["R"] = rep.R;
  j["R1"] = rep.R1;
  j["depth"] = depth_family_name(rep.depth_kind.family);
  j["n_directions"] = rep.depth_kind.n_directions;
  j["seed"] = rep.seed;
  j["depth_ties"] = rep.depth_ties;
  j["ridge_warning"] = rep.ridge_warning;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : evalue_table(rep))
    table.push_back({{"model", row.label}, {"evalue", row.evalue}});
  j["table"] = table;
  return j;
}

}  // namespace evsel
