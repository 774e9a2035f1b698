#include "flockioc/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace flockioc {

std::string format_weight(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string format_sci3(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", value);  // e.g. "2.33e+13"
  std::string s = buf;
  const auto e = s.find('e');
  const int exponent = std::atoi(s.c_str() + e + 1);
  return s.substr(0, e) + "e" + std::to_string(exponent);
}

std::string format_seconds(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g s", value);
  return buf;
}

std::string render_table_header(int known_index) {
  std::string header = "Flight No | t_f | ";
  bool first = true;
  for (int i = 0; i < WeightVector::kDim; ++i) {
    if (i == known_index) continue;
    if (!first) header += ", ";
    header += "c_" + std::to_string(i + 1);
    first = false;
  }
  header += " | r_w";
  return header;
}

std::string render_ioc_row(const std::string& label, double t_f,
                           const std::vector<double>& unknowns, double r_w) {
  std::string row = label + " | " + format_seconds(t_f) + " | ";
  bool negative = false;
  for (std::size_t j = 0; j < unknowns.size(); ++j) {
    if (j > 0) row += ", ";
    row += format_weight(unknowns[j]);
    negative = negative || unknowns[j] < 0.0;
  }
  row += " | " + format_sci3(r_w);
  if (negative) row += "  [negative weights]";
  return row;
}

std::string combined_label(const std::vector<std::string>& flight_ids) {
  std::string label;
  for (std::size_t j = 0; j < flight_ids.size(); ++j) {
    if (j > 0) label += ", ";
    label += flight_ids[j];
  }
  return label;
}

std::vector<double> unknown_entries(const IocSolution& solution) {
  std::vector<double> unknowns;
  unknowns.reserve(WeightVector::kDim - 1);
  for (int i = 0; i < WeightVector::kDim; ++i) {
    if (i != solution.c_hat.known_index) unknowns.push_back(solution.c_hat.c[i]);
  }
  return unknowns;
}

nlohmann::json solution_to_json(const IocSolution& solution) {
  nlohmann::json doc;
  doc["c_hat"] = std::vector<double>(solution.c_hat.c.data(),
                                     solution.c_hat.c.data() + WeightVector::kDim);
  doc["known_index"] = solution.c_hat.known_index + 1;
  doc["r_w"] = std::isfinite(solution.r_w) ? nlohmann::json(solution.r_w)
                                           : nlohmann::json(nullptr);
  doc["residual"] = solution.residual;
  doc["unique"] = solution.unique;
  std::vector<int> clipped;
  clipped.reserve(solution.negatives_clipped.size());
  for (const int idx : solution.negatives_clipped) clipped.push_back(idx + 1);
  doc["negatives_clipped"] = clipped;
  doc["flight_ids"] = solution.flight_ids;
  return doc;
}

nlohmann::json diagnostics_to_json(const GramDiagnostics& diagnostics) {
  nlohmann::json doc;
  doc["singular_values"] = std::vector<double>(
      diagnostics.singular_values.data(),
      diagnostics.singular_values.data() + diagnostics.singular_values.size());
  doc["r_w"] = std::isfinite(diagnostics.r_w) ? nlohmann::json(diagnostics.r_w)
                                              : nlohmann::json(nullptr);
  doc["rank"] = diagnostics.rank;
  std::vector<std::vector<double>> null_space;
  for (Eigen::Index j = 0; j < diagnostics.null_space.cols(); ++j) {
    null_space.emplace_back(diagnostics.null_space.col(j).data(),
                            diagnostics.null_space.col(j).data() + diagnostics.null_space.rows());
  }
  doc["null_space"] = null_space;
  return doc;
}

}  // namespace flockioc
