#include "flockioc/runner.hpp"

#include "flockioc/pipeline.hpp"
#include "flockioc/report.hpp"

#include "doctest.h"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace flockioc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flockioc_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_default_weights(const fs::path& dir) {
  const fs::path path = dir / "weights.json";
  std::ofstream out(path);
  out << R"({"default": [1, 1, 1, 2, 2, 2, 5, 5, 1]})" << "\n";
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const FollowerReport& report_for(const IocOutputs& outputs, const std::string& id) {
  for (const auto& report : outputs.followers)
    if (report.follower == id) return report;
  REQUIRE(false);
  return outputs.followers.front();
}

}  // namespace

TEST_CASE("synth writes the whole flock") {
  const fs::path dir = fresh_dir("synth_zero");
  RunConfig config;
  config.out_dir = dir.string();
  config.weights_file = write_default_weights(dir);
  config.leader = "zero";
  config.horizon = 2.0;
  config.dt = 0.1;

  const SynthOutputs outputs = cmd_synth(config);
  CHECK(fs::exists(outputs.csv_path));
  CHECK(fs::exists(outputs.truth_path));

  const auto tracks = load_tracks(outputs.csv_path);
  CHECK(tracks.size() == 10);  // root plus nine followers
  for (const auto& track : tracks) {
    CHECK(track.flight_id == "FF1");
    CHECK(track.size() == 21);
    for (const auto& p : track.position) CHECK(p.cwiseAbs().maxCoeff() <= 1e-9);
  }

  const nlohmann::json truth = nlohmann::json::parse(slurp(outputs.truth_path));
  CHECK(truth.at("weights").size() == 9);  // every follower
  CHECK(truth.at("weights").at("M").size() == 9);
  CHECK(truth.at("known_index").get<int>() == 9);
  fs::remove_all(dir);
}

TEST_CASE("weights file handling") {
  const fs::path dir = fresh_dir("synth_weights");
  RunConfig config;
  config.out_dir = dir.string();
  config.leader = "zero";
  config.horizon = 2.0;
  config.dt = 0.1;

  SUBCASE("synth refuses to run without weights") {
    CHECK_THROWS_WITH_AS(cmd_synth(config), doctest::Contains("--weights"),
                         std::invalid_argument);
  }

  SUBCASE("a follower without an entry or default is an error") {
    const fs::path path = dir / "partial.json";
    std::ofstream(path) << R"({"M": [1,1,1,2,2,2,5,5,1]})";
    config.weights_file = path.string();
    CHECK_THROWS_WITH_AS(cmd_synth(config), doctest::Contains("no entry for follower"),
                         std::runtime_error);
  }

  SUBCASE("an entry of the wrong length is an error") {
    const fs::path path = dir / "short.json";
    std::ofstream(path) << R"({"default": [1,1,1,2,2,2,5,5]})";
    config.weights_file = path.string();
    CHECK_THROWS(cmd_synth(config));
  }

  SUBCASE("malformed json is an error") {
    const fs::path path = dir / "broken.json";
    std::ofstream(path) << "{ not json";
    config.weights_file = path.string();
    CHECK_THROWS(cmd_synth(config));
  }
  fs::remove_all(dir);
}

TEST_CASE("synthesize then recover") {
  const fs::path dir = fresh_dir("roundtrip");
  RunConfig synth;
  synth.out_dir = dir.string();
  synth.weights_file = write_default_weights(dir);
  synth.horizon = 6.0;
  const SynthOutputs data = cmd_synth(synth);

  RunConfig ioc;
  ioc.out_dir = (dir / "out").string();
  ioc.data = {data.csv_path};
  const IocOutputs outputs = cmd_ioc(ioc);

  CHECK(outputs.all_ok);
  REQUIRE(outputs.followers.size() == 9);
  for (const auto& report : outputs.followers) {
    INFO("follower ", report.follower);
    CHECK(report.ok());
    REQUIRE(report.runs.size() == 1);  // one flight, so no stacked solve
    const IocSolution& sol = report.runs.front();
    CHECK(sol.unique);
    CHECK(std::isfinite(sol.r_w));
    // the vertical weights are observable and pinned to a true value of one
    CHECK(std::abs(sol.c_hat.c(2) - 1.0) <= 1e-2);
    CHECK(std::abs(sol.c_hat.c(5) - 2.0) <= 2e-2);
    CHECK(sol.c_hat.c(8) == 1.0);
    REQUIRE(report.t_f.size() == 1);
    CHECK(report.t_f.front() == doctest::Approx(6.0).epsilon(1e-9));
  }

  CHECK(fs::exists(outputs.report_path));
  const std::string table = slurp(outputs.report_path);
  CHECK(table.find("== follower M (leader A) ==") != std::string::npos);
  CHECK(table.find("Flight No | t_f |") != std::string::npos);

  const fs::path follower_json = fs::path(ioc.out_dir) / "ioc_M.json";
  REQUIRE(fs::exists(follower_json));
  const nlohmann::json doc = nlohmann::json::parse(slurp(follower_json));
  CHECK(doc.at("follower").get<std::string>() == "M");
  REQUIRE(doc.at("runs").size() == 1);
  CHECK(doc.at("runs")[0].at("known_index").get<int>() == 9);
  CHECK(doc.at("runs")[0].at("unique").get<bool>());
  fs::remove_all(dir);
}

TEST_CASE("recovery reports are deterministic") {
  const fs::path dir = fresh_dir("determinism");
  RunConfig synth;
  synth.out_dir = dir.string();
  synth.weights_file = write_default_weights(dir);
  synth.horizon = 4.0;
  const SynthOutputs data = cmd_synth(synth);

  RunConfig ioc;
  ioc.data = {data.csv_path};
  ioc.out_dir = (dir / "a").string();
  const IocOutputs first = cmd_ioc(ioc);
  ioc.out_dir = (dir / "b").string();
  ioc.jobs = 4;  // parallel fan-out must not change the output
  const IocOutputs second = cmd_ioc(ioc);

  CHECK(slurp(first.report_path) == slurp(second.report_path));
  fs::remove_all(dir);
}

TEST_CASE("a missing track only fails its own pair") {
  const fs::path dir = fresh_dir("missing_track");
  RunConfig synth;
  synth.out_dir = dir.string();
  synth.weights_file = write_default_weights(dir);
  synth.horizon = 4.0;
  const SynthOutputs data = cmd_synth(synth);

  auto tracks = load_tracks(data.csv_path);
  tracks.erase(std::remove_if(tracks.begin(), tracks.end(),
                              [](const RawTrack& t) { return t.pigeon_id == "I"; }),
               tracks.end());
  const std::string filtered = (dir / "filtered.csv").string();
  write_tracks_csv(filtered, tracks);

  RunConfig ioc;
  ioc.data = {filtered};
  ioc.out_dir = (dir / "out").string();
  const IocOutputs outputs = cmd_ioc(ioc);

  CHECK_FALSE(outputs.all_ok);
  const FollowerReport& broken = report_for(outputs, "I");
  REQUIRE_FALSE(broken.errors.empty());
  CHECK(broken.errors.front().find("'I'") != std::string::npos);
  for (const auto& report : outputs.followers) {
    if (report.follower == "I") continue;
    CHECK(report.ok());
    CHECK_FALSE(report.runs.empty());
  }
  fs::remove_all(dir);
}

TEST_CASE("diagnosing duplicate flights finds no new information") {
  const fs::path dir = fresh_dir("diag_dup");
  RunConfig synth;
  synth.out_dir = dir.string();
  synth.weights_file = write_default_weights(dir);
  synth.horizon = 4.0;
  synth.flights = {"FF1", "FF2"};  // identical copies of the same flight
  const SynthOutputs data = cmd_synth(synth);

  RunConfig diag;
  diag.data = {data.csv_path};
  diag.out_dir = (dir / "out").string();
  const DiagnoseOutputs outputs = cmd_diagnose(diag);

  CHECK(outputs.all_ok);
  REQUIRE(outputs.followers.size() == 9);
  for (const auto& follower : outputs.followers) {
    REQUIRE(follower.per_flight.size() == 2);
    CHECK(follower.stacked.rank == follower.per_flight.front().rank);
    CHECK_FALSE(follower.rank_improved);
  }
  const std::string text = slurp(outputs.report_path);
  CHECK(text.find("stacking added no new information (rank unchanged)") !=
        std::string::npos);
  CHECK(text.find("warning: stacked r_w did not improve") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("diagnosing orthogonal flights shows the gain from stacking") {
  const fs::path dir = fresh_dir("diag_orth");
  RunConfig synth_x;
  synth_x.out_dir = (dir / "x").string();
  synth_x.weights_file = write_default_weights(dir);
  synth_x.horizon = 4.0;
  synth_x.leader = "sinusoid-x";
  synth_x.flights = {"FF1"};
  const SynthOutputs data_x = cmd_synth(synth_x);

  RunConfig synth_y = synth_x;
  synth_y.out_dir = (dir / "y").string();
  synth_y.leader = "sinusoid-y";
  synth_y.flights = {"FF2"};
  const SynthOutputs data_y = cmd_synth(synth_y);

  RunConfig diag;
  diag.data = {data_x.csv_path, data_y.csv_path};
  diag.out_dir = (dir / "out").string();
  const DiagnoseOutputs outputs = cmd_diagnose(diag);

  CHECK(outputs.all_ok);
  for (const auto& follower : outputs.followers) {
    REQUIRE(follower.per_flight.size() == 2);
    const int best = std::max(follower.per_flight[0].rank, follower.per_flight[1].rank);
    CHECK(follower.stacked.rank > best);
    CHECK(follower.rank_improved);
  }
  CHECK(slurp(outputs.report_path).find("stacking added information (rank increased)") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("command line smoke test") {
  const fs::path dir = fresh_dir("cli_smoke");
  const std::string weights = write_default_weights(dir);
  const std::string cli = FLOCKIOC_CLI_PATH;

  auto run = [](const std::string& command) {
    const int status = std::system((command + " > /dev/null 2>&1").c_str());
    return status;
  };

  CHECK(run(cli + " --help") == 0);
  CHECK(run(cli + " synth --out " + dir.string() + " --weights " + weights +
            " --leader zero --horizon 2 --dt 0.1") == 0);
  CHECK(fs::exists(dir / "flights.csv"));
  CHECK(run(cli + " ioc --data " + (dir / "flights.csv").string() + " --out " +
            (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "report.txt"));
  CHECK(run(cli + " --no-such-flag") != 0);
  CHECK(run(cli + " ioc") != 0);  // --data is required
  fs::remove_all(dir);
}
