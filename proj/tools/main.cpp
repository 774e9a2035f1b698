#include "flockioc/runner.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <exception>

namespace {

void add_common_options(CLI::App* cmd, flockioc::RunConfig& config) {
  cmd->add_option("--hierarchy", config.hierarchy,
                  "Hierarchy file (leader,follower,delay per line) or builtin:table1")
      ->capture_default_str();
  cmd->add_option("--out", config.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--known-index", config.known_index,
                  "1-based pinned weight entry (1..9)")
      ->capture_default_str();
  cmd->add_option("--known-value", config.known_value, "Value of the pinned entry")
      ->capture_default_str();
}

void add_data_options(CLI::App* cmd, flockioc::RunConfig& config) {
  cmd->add_option("--data", config.data, "Input CSV file(s)")->required();
  cmd->add_option("--flights", config.flights,
                  "Flight ids to use (comma separated; default: all in the data)")
      ->delimiter(',');
  cmd->add_flag("--trim-warmup", config.trim_warmup,
                "Drop the first delay/dt samples of every dataset");
  cmd->add_option("--smooth", config.smooth,
                  "Odd moving-average window applied to positions (1 = off)")
      ->capture_default_str();
  cmd->add_option("--t-start", [&config](const CLI::results_t& res) {
        config.t_start = std::stod(res[0]);
        return true;
      }, "Keep samples at or after this time (seconds)");
  cmd->add_option("--t-end", [&config](const CLI::results_t& res) {
        config.t_end = std::stod(res[0]);
        return true;
      }, "Keep samples at or before this time (seconds)");
  cmd->add_option("--resample", [&config](const CLI::results_t& res) {
        config.resample = std::stod(res[0]);
        return true;
      }, "Resample tracks to this uniform period (seconds)");
  cmd->add_option("--jobs", config.jobs, "Worker threads across followers")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader-follower flock simulation and inverse optimal control"};
  app.require_subcommand(1);
  flockioc::RunConfig config;

  CLI::App* synth = app.add_subcommand(
      "synth", "Simulate the flock and write a synthetic data CSV plus ground-truth weights");
  add_common_options(synth, config);
  synth->add_option("--weights", config.weights_file,
                    "JSON map follower -> 9 weights (key \"default\" allowed)")
      ->required();
  synth->add_option("--leader", config.leader,
                    "Leader trajectory spec (sinusoid, sinusoid-x, sinusoid-y, line, zero, "
                    "polyline:<file>, csv:<file>)")
      ->capture_default_str();
  synth->add_option("--flights", config.flights, "Flight ids to emit (default: FF1)")
      ->delimiter(',');
  synth->add_option("--t0", config.t0, "Start time (seconds)")->capture_default_str();
  synth->add_option("--dt", config.dt, "Sample period (seconds)")->capture_default_str();
  synth->add_option("--horizon", config.horizon, "Flight duration (seconds)")
      ->capture_default_str();
  synth->add_option("--noise-sigma", config.noise_sigma,
                    "Std-dev of Gaussian noise added to emitted positions (meters)")
      ->capture_default_str();
  synth->add_option("--seed", config.seed, "Noise RNG seed")->capture_default_str();

  CLI::App* ioc = app.add_subcommand(
      "ioc", "Recover follower cost weights from observed trajectories");
  add_common_options(ioc, config);
  add_data_options(ioc, config);
  ioc->add_flag("--clip", config.clip, "Zero tiny negative recovered weights");

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Report Gram conditioning, rank, and unidentifiable directions");
  add_common_options(diagnose, config);
  add_data_options(diagnose, config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto outputs = flockioc::cmd_synth(config);
      std::printf("wrote %s and %s\n", outputs.csv_path.c_str(), outputs.truth_path.c_str());
      return 0;
    }
    if (ioc->parsed()) {
      const auto outputs = flockioc::cmd_ioc(config);
      std::printf("wrote %s (%zu followers)\n", outputs.report_path.c_str(),
                  outputs.followers.size());
      if (!outputs.all_ok) {
        std::fprintf(stderr, "some runs failed; see the report for details\n");
        return 1;
      }
      return 0;
    }
    const auto outputs = flockioc::cmd_diagnose(config);
    std::printf("wrote %s (%zu followers)\n", outputs.report_path.c_str(),
                outputs.followers.size());
    return outputs.all_ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
