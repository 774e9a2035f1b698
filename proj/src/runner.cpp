#include "flockioc/runner.hpp"

#include "flockioc/generators.hpp"
#include "flockioc/hierarchy.hpp"
#include "flockioc/lqt.hpp"
#include "flockioc/pipeline.hpp"
#include "flockioc/report.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace flockioc {
namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

/// 0-based pinned index from the CLI's 1-based flag.
int pinned_index(const RunConfig& config) {
  if (config.known_index < 1 || config.known_index > WeightVector::kDim) {
    throw std::invalid_argument("--known-index must be between 1 and 9");
  }
  return config.known_index - 1;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` worker threads. Exceptions
/// must be captured inside fn; slots are independent so results stay ordered.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& worker : pool) worker.join();
}

std::map<std::string, WeightVector> load_weights_file(const std::string& path,
                                                      const FlockHierarchy& hierarchy,
                                                      int known_index) {
  if (path.empty()) {
    throw std::invalid_argument("synth requires --weights (JSON map follower -> 9 weights)");
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weights file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("weights file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error("weights file '" + path + "': expected a JSON object");
  }

  auto parse_entry = [&](const nlohmann::json& entry, const std::string& who) {
    if (!entry.is_array() || entry.size() != WeightVector::kDim) {
      throw std::runtime_error("weights file '" + path + "': entry '" + who +
                               "' must be an array of 9 numbers");
    }
    Vec9 c;
    for (int i = 0; i < WeightVector::kDim; ++i) c[i] = entry[i].get<double>();
    return WeightVector::pinned(c, known_index);
  };

  std::map<std::string, WeightVector> weights;
  for (const std::string& follower : hierarchy.follower_set()) {
    if (doc.contains(follower)) {
      weights[follower] = parse_entry(doc[follower], follower);
    } else if (doc.contains("default")) {
      weights[follower] = parse_entry(doc["default"], "default");
    } else {
      throw std::runtime_error("weights file '" + path + "': no entry for follower '" +
                               follower + "' and no \"default\"");
    }
  }
  return weights;
}

struct PreparedData {
  FlockHierarchy hierarchy;
  std::vector<RawTrack> tracks;
  std::vector<std::string> flights;
};

PreparedData prepare_data(const RunConfig& config) {
  PreparedData prepared;
  prepared.hierarchy = resolve_hierarchy(config.hierarchy);
  if (config.data.empty()) throw std::invalid_argument("no input data files (use --data)");

  for (const auto& path : config.data) {
    for (auto& track : load_tracks(path)) {
      if (config.t_start || config.t_end) {
        track = clip_time_window(track, config.t_start, config.t_end);
      }
      if (config.resample) track = resample_track(track, *config.resample);
      prepared.tracks.push_back(std::move(track));
    }
  }

  if (!config.flights.empty()) {
    prepared.flights = config.flights;
  } else {
    std::set<std::string> seen;
    for (const auto& track : prepared.tracks) seen.insert(track.flight_id);
    prepared.flights.assign(seen.begin(), seen.end());
  }
  if (prepared.flights.empty()) throw std::invalid_argument("no flights found in the data");
  return prepared;
}

/// Builds the dataset of one (pair, flight), isolating failures per call.
PairDataset build_one_dataset(const PreparedData& prepared, const LeaderFollowerPair& pair,
                              const std::string& flight, const RunConfig& config) {
  FlockHierarchy single;
  single.pairs.push_back(pair);
  PipelineOptions options;
  options.trim_warmup = config.trim_warmup;
  options.smoothing_window = config.smooth;
  auto datasets = build_pair_datasets(prepared.tracks, single, {flight}, options);
  return std::move(datasets.front());
}

std::string follower_heading(const std::string& follower, const std::string& leader) {
  return "== follower " + follower + " (leader " + leader + ") ==\n";
}

}  // namespace

SynthOutputs cmd_synth(const RunConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("synth: --dt must be positive");
  if (!(config.horizon > 0.0)) throw std::invalid_argument("synth: --horizon must be positive");
  const auto n = static_cast<Eigen::Index>(std::round(config.horizon / config.dt)) + 1;
  if (n < 2) throw std::invalid_argument("synth: horizon shorter than one sample period");

  const FlockHierarchy hierarchy = resolve_hierarchy(config.hierarchy);
  const HierarchyReport report = validate_hierarchy(hierarchy, config.dt);
  if (!report.ok()) {
    std::string msg = "synth: hierarchy invalid for dt:";
    for (const auto& issue : report.issues) msg += " " + issue + ";";
    throw std::invalid_argument(msg);
  }
  const int known = pinned_index(config);
  const std::map<std::string, WeightVector> weights =
      load_weights_file(config.weights_file, hierarchy, known);

  const SampledTrajectory leader =
      make_leader_trajectory(config.leader, config.t0, config.dt, n);
  const std::map<std::string, SampledTrajectory> rollout =
      rollout_hierarchy(hierarchy, leader, weights);

  const std::vector<std::string> flights =
      config.flights.empty() ? std::vector<std::string>{"FF1"} : config.flights;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.noise_sigma);
  std::vector<RawTrack> tracks;
  for (const auto& flight : flights) {
    for (const auto& [agent, traj] : rollout) {
      RawTrack track;
      track.flight_id = flight;
      track.pigeon_id = agent;
      track.t.reserve(static_cast<std::size_t>(traj.size()));
      track.position.reserve(static_cast<std::size_t>(traj.size()));
      for (Eigen::Index k = 0; k < traj.size(); ++k) {
        track.t.push_back(traj.time_at(k));
        Vec3 position = position_of(traj.states.col(k));
        if (config.noise_sigma > 0.0) {
          position += Vec3(noise(rng), noise(rng), noise(rng));
        }
        track.position.push_back(position);
      }
      tracks.push_back(std::move(track));
    }
  }

  fs::create_directories(config.out_dir);
  SynthOutputs outputs;
  outputs.csv_path = (fs::path(config.out_dir) / "flights.csv").string();
  outputs.truth_path = (fs::path(config.out_dir) / "truth_weights.json").string();
  write_tracks_csv(outputs.csv_path, tracks);

  nlohmann::json truth;
  truth["flights"] = flights;
  truth["known_index"] = config.known_index;
  truth["leader"] = config.leader;
  truth["dt"] = config.dt;
  truth["horizon"] = config.horizon;
  truth["noise_sigma"] = config.noise_sigma;
  nlohmann::json weight_map;
  for (const auto& [follower, w] : weights) {
    weight_map[follower] =
        std::vector<double>(w.c.data(), w.c.data() + WeightVector::kDim);
  }
  truth["weights"] = weight_map;
  write_text_file(outputs.truth_path, truth.dump(2) + "\n");
  return outputs;
}

IocOutputs cmd_ioc(const RunConfig& config) {
  const PreparedData prepared = prepare_data(config);
  const int known = pinned_index(config);
  SolveOptions solve_options;
  solve_options.clip_small_negatives = config.clip;

  IocOutputs outputs;
  outputs.followers.resize(prepared.hierarchy.pairs.size());

  // Followers are independent; fan them out across --jobs workers. Each slot
  // only touches its own report, so the output stays deterministic.
  std::vector<LeaderFollowerPair> pairs = prepared.hierarchy.pairs;
  std::sort(pairs.begin(), pairs.end(),
            [](const LeaderFollowerPair& a, const LeaderFollowerPair& b) {
              return a.follower < b.follower;
            });
  parallel_for(pairs.size(), config.jobs, [&](std::size_t slot) {
    const LeaderFollowerPair& pair = pairs[slot];
    FollowerReport& report = outputs.followers[slot];
    report.follower = pair.follower;
    report.leader = pair.leader;

    std::vector<FlightData> usable;
    std::vector<std::string> usable_ids;
    double t_f_max = 0.0;
    for (const auto& flight : prepared.flights) {
      try {
        PairDataset dataset = build_one_dataset(prepared, pair, flight, config);
        const GramMatrix gram = assemble_gram_single(dataset.traj, dataset.desired);
        IocSolution solution = solve_weights(gram, known, config.known_value, solve_options);
        solution.flight_ids = {flight};
        report.runs.push_back(std::move(solution));
        report.t_f.push_back(dataset.traj.end_time());
        t_f_max = std::max(t_f_max, dataset.traj.end_time());
        usable.push_back({std::move(dataset.traj), std::move(dataset.desired)});
        usable_ids.push_back(flight);
      } catch (const std::exception& e) {
        report.errors.push_back("flight '" + flight + "': " + e.what());
      }
    }
    if (usable.size() > 1) {
      try {
        const GramMatrix gram = assemble_gram_multi(usable);
        IocSolution solution = solve_weights(gram, known, config.known_value, solve_options);
        solution.flight_ids = usable_ids;
        report.runs.push_back(std::move(solution));
        report.t_f.push_back(t_f_max);
      } catch (const std::exception& e) {
        report.errors.push_back("stacked flights: " + std::string(e.what()));
      }
    } else if (usable.empty()) {
      report.errors.push_back("no usable flight data");
    }
  });

  fs::create_directories(config.out_dir);
  std::string combined_report;
  for (const auto& report : outputs.followers) {
    std::ostringstream table;
    table << follower_heading(report.follower, report.leader);
    table << render_table_header(known) << '\n';
    for (std::size_t j = 0; j < report.runs.size(); ++j) {
      const IocSolution& run = report.runs[j];
      const std::string label = run.flight_ids.size() == 1 ? run.flight_ids.front()
                                                           : combined_label(run.flight_ids);
      table << render_ioc_row(label, report.t_f[j], unknown_entries(run), run.r_w) << '\n';
    }
    for (const auto& error : report.errors) table << "error: " << error << '\n';

    nlohmann::json doc;
    doc["follower"] = report.follower;
    doc["leader"] = report.leader;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t j = 0; j < report.runs.size(); ++j) {
      nlohmann::json run = solution_to_json(report.runs[j]);
      run["t_f"] = report.t_f[j];
      runs.push_back(std::move(run));
    }
    doc["runs"] = runs;
    doc["errors"] = report.errors;

    const fs::path base = fs::path(config.out_dir) / ("ioc_" + report.follower);
    write_text_file(base.string() + ".json", doc.dump(2) + "\n");
    write_text_file(base.string() + ".txt", table.str());
    combined_report += table.str() + "\n";
  }

  outputs.report_path = (fs::path(config.out_dir) / "report.txt").string();
  write_text_file(outputs.report_path, combined_report);
  outputs.all_ok = std::all_of(outputs.followers.begin(), outputs.followers.end(),
                               [](const FollowerReport& r) { return r.ok(); });
  return outputs;
}

DiagnoseOutputs cmd_diagnose(const RunConfig& config) {
  const PreparedData prepared = prepare_data(config);
  const int known = pinned_index(config);

  DiagnoseOutputs outputs;
  outputs.followers.resize(prepared.hierarchy.pairs.size());

  std::vector<LeaderFollowerPair> pairs = prepared.hierarchy.pairs;
  std::sort(pairs.begin(), pairs.end(),
            [](const LeaderFollowerPair& a, const LeaderFollowerPair& b) {
              return a.follower < b.follower;
            });
  parallel_for(pairs.size(), config.jobs, [&](std::size_t slot) {
    const LeaderFollowerPair& pair = pairs[slot];
    FollowerDiagnosis& diagnosis = outputs.followers[slot];
    diagnosis.follower = pair.follower;
    diagnosis.leader = pair.leader;

    std::vector<FlightData> usable;
    for (const auto& flight : prepared.flights) {
      try {
        PairDataset dataset = build_one_dataset(prepared, pair, flight, config);
        const GramMatrix gram = assemble_gram_single(dataset.traj, dataset.desired);
        diagnosis.per_flight.push_back(diagnose(gram, known));
        diagnosis.flight_ids.push_back(flight);
        usable.push_back({std::move(dataset.traj), std::move(dataset.desired)});
      } catch (const std::exception& e) {
        diagnosis.errors.push_back("flight '" + flight + "': " + e.what());
      }
    }
    if (!usable.empty()) {
      try {
        diagnosis.stacked = diagnose(assemble_gram_multi(usable), known);
        int best_rank = 0;
        double best_rw = std::numeric_limits<double>::infinity();
        for (const auto& d : diagnosis.per_flight) {
          best_rank = std::max(best_rank, d.rank);
          best_rw = std::min(best_rw, d.r_w);
        }
        diagnosis.rank_improved = diagnosis.stacked.rank > best_rank;
        diagnosis.rw_improved = diagnosis.stacked.r_w < best_rw;
      } catch (const std::exception& e) {
        diagnosis.errors.push_back("stacked flights: " + std::string(e.what()));
      }
    } else {
      diagnosis.errors.push_back("no usable flight data");
    }
  });

  fs::create_directories(config.out_dir);
  std::string combined_report;
  for (const auto& diagnosis : outputs.followers) {
    std::ostringstream text;
    text << follower_heading(diagnosis.follower, diagnosis.leader);
    for (std::size_t j = 0; j < diagnosis.per_flight.size(); ++j) {
      const GramDiagnostics& d = diagnosis.per_flight[j];
      text << diagnosis.flight_ids[j] << ": rank " << d.rank << ", r_w " << format_sci3(d.r_w)
           << '\n';
    }
    if (!diagnosis.flight_ids.empty()) {
      text << "stacked (" << combined_label(diagnosis.flight_ids) << "): rank "
           << diagnosis.stacked.rank << ", r_w " << format_sci3(diagnosis.stacked.r_w) << '\n';
      if (diagnosis.flight_ids.size() > 1) {
        text << (diagnosis.rank_improved
                     ? "stacking added information (rank increased)\n"
                     : "stacking added no new information (rank unchanged)\n");
        if (!diagnosis.rw_improved) {
          text << "warning: stacked r_w did not improve over the best single flight\n";
        }
      }
    }
    for (const auto& error : diagnosis.errors) text << "error: " << error << '\n';

    nlohmann::json doc;
    doc["follower"] = diagnosis.follower;
    doc["leader"] = diagnosis.leader;
    nlohmann::json per_flight;
    for (std::size_t j = 0; j < diagnosis.per_flight.size(); ++j) {
      per_flight[diagnosis.flight_ids[j]] = diagnostics_to_json(diagnosis.per_flight[j]);
    }
    doc["per_flight"] = per_flight;
    if (!diagnosis.flight_ids.empty()) {
      doc["stacked"] = diagnostics_to_json(diagnosis.stacked);
      doc["rank_improved"] = diagnosis.rank_improved;
      doc["rw_improved"] = diagnosis.rw_improved;
    }
    doc["errors"] = diagnosis.errors;
    const fs::path base = fs::path(config.out_dir) / ("diagnose_" + diagnosis.follower);
    write_text_file(base.string() + ".json", doc.dump(2) + "\n");
    combined_report += text.str() + "\n";
  }

  outputs.report_path = (fs::path(config.out_dir) / "diagnose.txt").string();
  write_text_file(outputs.report_path, combined_report);
  outputs.all_ok =
      std::all_of(outputs.followers.begin(), outputs.followers.end(),
                  [](const FollowerDiagnosis& d) { return d.errors.empty(); });
  return outputs;
}

}  // namespace flockioc
