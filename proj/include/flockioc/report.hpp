#pragma once

#include "flockioc/ioc.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace flockioc {

/// Weight entry for the text table: exact zeros render as "0", everything
/// else with two decimals.
std::string format_weight(double value);

/// Three significant digits in compact scientific notation, e.g. 2.33e13.
std::string format_sci3(double value);

/// Seconds column, e.g. "2451 s" or "2475.8 s".
std::string format_seconds(double value);

/// Header of the per-follower table. Unknown-weight columns are named by
/// their 1-based position in the stacked weight vector.
std::string render_table_header(int known_index);

/// One table row: `<label> | <t_f> | c_..., ... | <r_w>`. `unknowns` holds the
/// eight non-pinned weight entries in ascending index order. A trailing
/// marker is added when any weight is negative (an invalid forward problem).
std::string render_ioc_row(const std::string& label, double t_f,
                           const std::vector<double>& unknowns, double r_w);

/// Row label of a multi-flight solution, e.g. "FF4, FF5, FF7, FF9".
std::string combined_label(const std::vector<std::string>& flight_ids);

/// Extracts the non-pinned entries of a solution in ascending index order.
std::vector<double> unknown_entries(const IocSolution& solution);

/// JSON document per solution. Indices (known_index, negatives_clipped) are
/// 1-based to match the CLI and table conventions; a singular r_w serializes
/// as null (JSON has no infinity).
nlohmann::json solution_to_json(const IocSolution& solution);

nlohmann::json diagnostics_to_json(const GramDiagnostics& diagnostics);

}  // namespace flockioc
