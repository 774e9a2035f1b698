#pragma once

#include "flockioc/ioc.hpp"
#include "flockioc/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flockioc {

/// Shared configuration of the CLI subcommands. Indices follow the CLI
/// convention: known_index is 1-based into the stacked weight vector.
struct RunConfig {
  // common
  std::string hierarchy = "builtin:table1";  ///< file path or builtin:table1
  std::vector<std::string> data;             ///< input CSV paths (ioc/diagnose)
  std::vector<std::string> flights;          ///< empty: every flight in the data
  int known_index = 9;
  double known_value = 1.0;
  bool trim_warmup = false;
  bool clip = false;
  int smooth = 1;
  std::optional<double> t_start;
  std::optional<double> t_end;
  std::optional<double> resample;
  std::string out_dir = ".";
  int jobs = 1;

  // synth only
  std::string leader = "sinusoid";
  std::string weights_file;  ///< JSON map follower -> 9 weights ("default" allowed)
  double t0 = 0.0;
  double dt = 0.02;
  double horizon = 10.0;
  double noise_sigma = 0.0;
  unsigned long seed = 1;
};

struct SynthOutputs {
  std::string csv_path;
  std::string truth_path;
};

/// Simulates the flock over the configured horizon and writes a data CSV in
/// the pipeline's input schema plus a ground-truth weights JSON.
SynthOutputs cmd_synth(const RunConfig& config);

/// Per-follower outcome of `ioc`: one solution per requested flight followed
/// by the stacked multi-flight solution, with matching data end times.
struct FollowerReport {
  std::string follower;
  std::string leader;
  std::vector<IocSolution> runs;
  std::vector<double> t_f;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

struct IocOutputs {
  std::vector<FollowerReport> followers;
  std::string report_path;
  bool all_ok = false;
};

/// Runs inverse optimal control for every follower of the hierarchy found in
/// the data: per-flight solves plus one stacked solve across the requested
/// flights. Writes per-follower JSON and text tables plus a combined report.
/// Failures are isolated per (follower, flight) and recorded, not fatal.
IocOutputs cmd_ioc(const RunConfig& config);

/// Conditioning report per follower: per-flight and stacked spectra, ranks,
/// unidentifiable directions, and whether stacking flights added information.
struct FollowerDiagnosis {
  std::string follower;
  std::string leader;
  std::vector<std::string> flight_ids;
  std::vector<GramDiagnostics> per_flight;
  GramDiagnostics stacked;
  bool rank_improved = false;   ///< stacked rank exceeds the best single flight
  bool rw_improved = false;     ///< stacked r_w strictly better than the best single flight
  std::vector<std::string> errors;
};

struct DiagnoseOutputs {
  std::vector<FollowerDiagnosis> followers;
  std::string report_path;
  bool all_ok = false;
};

DiagnoseOutputs cmd_diagnose(const RunConfig& config);

}  // namespace flockioc
