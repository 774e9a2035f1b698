#include "flockioc/pipeline.hpp"

#include "flockioc/generators.hpp"
#include "flockioc/hierarchy.hpp"
#include "flockioc/lqt.hpp"

#include "doctest.h"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace flockioc;

namespace {

constexpr double kMeterPerDegree = 6371000.0 * M_PI / 180.0;  // 111194.9266...

RawTrack uniform_track(double dt, Eigen::Index n,
                       const std::function<Vec3(double)>& position) {
  RawTrack track;
  track.flight_id = "F1";
  track.pigeon_id = "P1";
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    track.t.push_back(t);
    track.position.push_back(position(t));
  }
  return track;
}

}  // namespace

TEST_CASE("cartesian parsing sorts rows into tracks") {
  std::istringstream in(
      "flight_id,pigeon_id,t,x,y,z\n"
      "FF1,B,0.5,4,5,6\n"
      "FF1,A,1.0,7,8,9\n"
      "FF1,A,0.0,1,2,3\n");
  const auto tracks = parse_tracks(in, TrackFormat::kAuto, "mem");
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].pigeon_id == "A");
  CHECK(tracks[1].pigeon_id == "B");
  REQUIRE(tracks[0].size() == 2);
  CHECK(tracks[0].t[0] == 0.0);
  CHECK(tracks[0].t[1] == 1.0);
  CHECK(tracks[0].position[0] == Vec3(1, 2, 3));
  CHECK(tracks[0].position[1] == Vec3(7, 8, 9));
  CHECK(tracks[1].position[0] == Vec3(4, 5, 6));
}

TEST_CASE("geodetic parsing projects about the flight anchor") {
  std::istringstream in(
      "flight_id,pigeon_id,t,lat,lon,alt\n"
      "F1,P1,2.0,1.0,0.0,50\n"
      "F1,P2,0.0,0.0,0.0,100\n"
      "F1,P2,1.0,0.0,1.0,100\n");
  const auto tracks = parse_tracks(in, TrackFormat::kGeodetic, "mem");
  REQUIRE(tracks.size() == 2);

  const RawTrack& p2 = tracks[1];  // holds the time-earliest sample: the anchor
  CHECK(p2.position[0].head<2>().cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(p2.position[0].z() == 100.0);  // altitude stays as recorded
  CHECK(p2.position[1].x() == doctest::Approx(kMeterPerDegree).epsilon(1e-8));
  CHECK(std::abs(p2.position[1].y()) <= 1e-3);

  const RawTrack& p1 = tracks[0];  // one degree of latitude north
  CHECK(p1.position[0].y() == doctest::Approx(kMeterPerDegree).epsilon(1e-8));
  CHECK(std::abs(p1.position[0].x()) <= 1e-3);
  CHECK(p1.position[0].z() == 50.0);
}

TEST_CASE("anchor ties break toward the smallest pigeon id") {
  std::istringstream in(
      "flight_id,pigeon_id,t,lat,lon,alt\n"
      "F2,B,0.0,1.0,0.0,5\n"
      "F2,A,0.0,0.0,0.0,7\n");
  const auto tracks = parse_tracks(in, TrackFormat::kGeodetic, "mem");
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].pigeon_id == "A");
  CHECK(tracks[0].position[0].head<2>().cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(tracks[0].position[0].z() == 7.0);
  CHECK(tracks[1].position[0].y() == doctest::Approx(kMeterPerDegree).epsilon(1e-8));
}

TEST_CASE("each flight gets its own anchor") {
  std::istringstream in(
      "flight_id,pigeon_id,t,lat,lon,alt\n"
      "F1,A,0.0,10.0,20.0,100\n"
      "F2,A,0.0,-5.0,30.0,200\n");
  const auto tracks = parse_tracks(in, TrackFormat::kGeodetic, "mem");
  REQUIRE(tracks.size() == 2);
  for (const auto& track : tracks)
    CHECK(track.position[0].head<2>().cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("malformed rows report file and line") {
  std::istringstream short_row(
      "flight_id,pigeon_id,t,x,y,z\n"
      "FF1,A,0.0,1,2,3\n"
      "FF1,A,1.0,1,2\n");
  CHECK_THROWS_WITH_AS(parse_tracks(short_row, TrackFormat::kAuto, "test.csv"),
                       doctest::Contains("test.csv:3"), std::runtime_error);

  std::istringstream bad_number(
      "flight_id,pigeon_id,t,x,y,z\n"
      "FF1,A,zero,1,2,3\n");
  CHECK_THROWS_WITH_AS(parse_tracks(bad_number, TrackFormat::kAuto, "test.csv"),
                       doctest::Contains("test.csv:2"), std::runtime_error);
}

TEST_CASE("repeated timestamps within a track are rejected") {
  std::istringstream in(
      "flight_id,pigeon_id,t,x,y,z\n"
      "FF1,A,1.0,1,2,3\n"
      "FF1,A,1.0,4,5,6\n");
  CHECK_THROWS_WITH_AS(parse_tracks(in, TrackFormat::kAuto, "mem"),
                       doctest::Contains("strictly increasing"), std::runtime_error);
}

TEST_CASE("format request must match the header") {
  std::istringstream in(
      "flight_id,pigeon_id,t,x,y,z\n"
      "FF1,A,0.0,1,2,3\n");
  CHECK_THROWS_WITH_AS(parse_tracks(in, TrackFormat::kGeodetic, "mem"),
                       doctest::Contains("header disagrees"), std::runtime_error);

  std::istringstream geo(
      "flight_id,pigeon_id,t,lat,lon,alt\n"
      "FF1,A,0.0,0,0,0\n");
  CHECK_NOTHROW(parse_tracks(geo, TrackFormat::kAuto, "mem"));
}

TEST_CASE("missing files are reported") {
  CHECK_THROWS_WITH_AS(load_tracks("/nonexistent/tracks.csv"),
                       doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("csv round trip preserves every bit") {
  RawTrack track = uniform_track(0.1, 6, [](double t) {
    return Vec3(std::sqrt(2.0) * t, M_PI * t * t, -1.0 / 3.0 + t);
  });
  track.flight_id = "FF9";
  track.pigeon_id = "H";

  const std::string path =
      (std::filesystem::temp_directory_path() / "flockioc_roundtrip.csv").string();
  write_tracks_csv(path, {track});
  const auto loaded = load_tracks(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].flight_id == "FF9");
  CHECK(loaded[0].pigeon_id == "H");
  REQUIRE(loaded[0].size() == track.size());
  for (std::size_t k = 0; k < track.size(); ++k) {
    CHECK(loaded[0].t[k] == track.t[k]);
    CHECK(loaded[0].position[k] == track.position[k]);
  }
}

TEST_CASE("time window clipping") {
  const RawTrack track =
      uniform_track(1.0, 11, [](double t) { return Vec3(t, 0, 0); });

  const RawTrack mid = clip_time_window(track, 3.0, 7.0);
  REQUIRE(mid.size() == 5);
  CHECK(mid.t.front() == 3.0);
  CHECK(mid.t.back() == 7.0);

  // bounds are inclusive with a small tolerance
  const RawTrack fuzzy = clip_time_window(track, 3.0 + 5e-10, 7.0 - 5e-10);
  CHECK(fuzzy.size() == 5);

  const RawTrack tail = clip_time_window(track, 8.0, std::nullopt);
  REQUIRE(tail.size() == 3);
  CHECK(tail.t.front() == 8.0);

  const RawTrack head = clip_time_window(track, std::nullopt, 1.0);
  REQUIRE(head.size() == 2);
  CHECK(head.t.back() == 1.0);

  const RawTrack all = clip_time_window(track, std::nullopt, std::nullopt);
  CHECK(all.size() == track.size());
}

TEST_CASE("resampling is exact on piecewise-linear tracks") {
  RawTrack track;
  track.flight_id = "F";
  track.pigeon_id = "P";
  const Vec3 a(1.0, -2.0, 0.5), b(0.3, 0.7, -1.1);
  for (double t : {0.0, 0.3, 1.0, 1.4}) {
    track.t.push_back(t);
    track.position.push_back(a + t * b);
  }

  const RawTrack uniform = resample_track(track, 0.1);
  REQUIRE(uniform.size() == 15);
  CHECK(uniform.sample_period() == doctest::Approx(0.1).epsilon(1e-12));
  for (std::size_t k = 0; k < uniform.size(); ++k) {
    const Vec3 expect = a + uniform.t[k] * b;
    CHECK((uniform.position[k] - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  CHECK_THROWS_WITH_AS(resample_track(track, 0.0), doctest::Contains("positive"),
                       std::invalid_argument);
}

TEST_CASE("sample period demands uniform spacing") {
  const RawTrack good =
      uniform_track(0.25, 9, [](double t) { return Vec3(t, t, t); });
  CHECK(good.sample_period() == doctest::Approx(0.25).epsilon(1e-12));

  RawTrack bad = good;
  bad.t[4] += 0.05;
  CHECK_THROWS_AS(bad.sample_period(), std::invalid_argument);
}

TEST_CASE("differentiation input guards") {
  const RawTrack tiny =
      uniform_track(0.1, 4, [](double t) { return Vec3(t, 0, 0); });
  CHECK_THROWS_AS(differentiate(tiny), std::invalid_argument);

  const RawTrack track =
      uniform_track(0.1, 15, [](double t) { return Vec3(t, 0, 0); });
  CHECK_THROWS_WITH_AS(differentiate(track, 2), doctest::Contains("odd"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(differentiate(track, -3), doctest::Contains("odd"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(differentiate(track, 15), doctest::Contains("shorter"),
                       std::invalid_argument);
}

TEST_CASE("differentiation is exact on affine motion") {
  const Vec3 p0(1.0, -2.0, 3.0), v(0.4, -0.1, 2.5);
  const RawTrack track =
      uniform_track(0.05, 21, [&](double t) { return Vec3(p0 + t * v); });
  const SampledTrajectory traj = differentiate(track);

  REQUIRE(traj.size() == 21);
  CHECK(traj.dt == doctest::Approx(0.05).epsilon(1e-12));
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    CHECK((position_of(traj.states.col(k)) - (p0 + traj.time_at(k) * v))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    CHECK((velocity_of(traj.states.col(k)) - v).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(traj.controls.col(k).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("differentiation is exact on quadratic motion") {
  const Vec3 acc(2.0, -1.0, 0.5);
  const RawTrack track = uniform_track(
      0.1, 25, [&](double t) { return Vec3(0.5 * t * t * acc); });
  const SampledTrajectory traj = differentiate(track);

  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    const double t = traj.time_at(k);
    CHECK((velocity_of(traj.states.col(k)) - t * acc).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((traj.controls.col(k) - acc).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("differentiation error on smooth motion is small") {
  const double dt = 0.01;
  const Eigen::Index n = 401;
  const RawTrack track = uniform_track(dt, n, [](double t) {
    return Vec3(std::sin(t), std::cos(2.0 * t), 0.3 * t);
  });
  const SampledTrajectory traj = differentiate(track);

  double vel_err = 0.0, acc_err_all = 0.0, acc_err_interior = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = traj.time_at(k);
    const Vec3 v(std::cos(t), -2.0 * std::sin(2.0 * t), 0.3);
    const Vec3 a(-std::sin(t), -4.0 * std::cos(2.0 * t), 0.0);
    vel_err = std::max(vel_err,
                       (velocity_of(traj.states.col(k)) - v).cwiseAbs().maxCoeff());
    const double ae = (traj.controls.col(k) - a).cwiseAbs().maxCoeff();
    acc_err_all = std::max(acc_err_all, ae);
    if (k >= 2 && k < n - 2) acc_err_interior = std::max(acc_err_interior, ae);
  }
  CHECK(vel_err <= 5e-4);
  CHECK(acc_err_interior <= 2e-3);
  CHECK(acc_err_all <= 0.1);  // one-sided endpoint stencils dominate
}

TEST_CASE("light smoothing does not bias quadratic motion") {
  const Vec3 acc(1.0, -0.5, 2.0);
  const RawTrack track = uniform_track(
      0.1, 25, [&](double t) { return Vec3(0.5 * t * t * acc); });
  const SampledTrajectory traj = differentiate(track, 3);

  // a centered moving average shifts a quadratic by a constant, so away from
  // the shrunken-window endpoints the derivatives are untouched; accelerations
  // reach one sample further through the velocity stencil
  for (Eigen::Index k = 2; k < traj.size() - 2; ++k) {
    const double t = traj.time_at(k);
    CHECK((velocity_of(traj.states.col(k)) - t * acc).cwiseAbs().maxCoeff() <= 1e-8);
  }
  for (Eigen::Index k = 3; k < traj.size() - 3; ++k)
    CHECK((traj.controls.col(k) - acc).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("reintegrating the derivatives reproduces the track") {
  const double dt = 0.01;
  const Eigen::Index n = 401;
  const RawTrack track = uniform_track(dt, n, [](double t) {
    return Vec3(std::sin(t), std::cos(2.0 * t), 0.3 * t);
  });
  const SampledTrajectory traj = differentiate(track);

  Vec3 pos = position_of(traj.states.col(0));
  Vec3 vel = velocity_of(traj.states.col(0));
  double max_dev = 0.0, max_pos = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Vec3 vel_next = vel + 0.5 * dt * (traj.controls.col(k) + traj.controls.col(k + 1));
    pos += 0.5 * dt * (vel + vel_next);
    vel = vel_next;
    max_dev = std::max(max_dev, (pos - track.position[k + 1]).cwiseAbs().maxCoeff());
    max_pos = std::max(max_pos, track.position[k + 1].cwiseAbs().maxCoeff());
  }
  CHECK(max_dev / max_pos <= 1e-2);
}

TEST_CASE("delayed reference construction") {
  const SampledTrajectory leader = make_leader_trajectory("sinusoid", 0.0, 0.02, 101);

  SUBCASE("zero delay is the identity") {
    const SampledTrajectory d = make_desired(leader, 0.0);
    CHECK((d.states - leader.states).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.controls - leader.controls).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.t0 == leader.t0);
    CHECK(d.dt == leader.dt);
  }

  SUBCASE("positive delay shifts and holds the first sample") {
    const SampledTrajectory d = make_desired(leader, 0.04);  // two samples
    REQUIRE(d.size() == leader.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const Eigen::Index src = std::max<Eigen::Index>(0, i - 2);
      CHECK((d.states.col(i) - leader.states.col(src)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((d.controls.col(i) - leader.controls.col(src)).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("invalid delays are rejected") {
    CHECK_THROWS_WITH_AS(make_desired(leader, -0.02),
                         doctest::Contains("nonnegative"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(make_desired(leader, 0.03),
                         doctest::Contains("multiple"), std::invalid_argument);
  }
}

namespace {

std::vector<RawTrack> synthetic_flock_tracks(const std::vector<std::string>& flights,
                                             double dt, Eigen::Index n) {
  Vec9 values;
  values << 1, 1, 1, 2, 2, 2, 5, 5, 1;
  const WeightVector w = WeightVector::pinned(values, 8);
  std::map<std::string, WeightVector> weights;
  for (const auto& pair : default_hierarchy().pairs) weights[pair.follower] = w;

  std::vector<RawTrack> tracks;
  for (const auto& flight : flights) {
    const SampledTrajectory leader = make_leader_trajectory("sinusoid", 0.0, dt, n);
    const auto rolled = rollout_hierarchy(default_hierarchy(), leader, weights);
    for (const auto& [agent, traj] : rolled) {
      RawTrack track;
      track.flight_id = flight;
      track.pigeon_id = agent;
      for (Eigen::Index k = 0; k < traj.size(); ++k) {
        track.t.push_back(traj.time_at(k));
        track.position.push_back(position_of(traj.states.col(k)));
      }
      tracks.push_back(std::move(track));
    }
  }
  return tracks;
}

}  // namespace

TEST_CASE("pair datasets cover every pair and flight") {
  const std::vector<std::string> flights = {"FF1", "FF2", "FF3", "FF4"};
  const auto tracks = synthetic_flock_tracks(flights, 0.1, 31);
  const FlockHierarchy hierarchy = default_hierarchy();
  const auto datasets = build_pair_datasets(tracks, hierarchy, flights);

  CHECK(datasets.size() == 36);  // 9 pairs x 4 flights
  for (const auto& ds : datasets) {
    const LeaderFollowerPair* pair = hierarchy.pair_for(ds.follower_id);
    REQUIRE(pair != nullptr);
    CHECK(ds.leader_id == pair->leader);
    CHECK(ds.delay == pair->delay);
    CHECK(ds.traj.dt == ds.desired.dt);
    CHECK(ds.traj.t0 == ds.desired.t0);
    CHECK(ds.traj.size() == ds.desired.size());
    CHECK(ds.traj.size() >= 2);
  }
}

TEST_CASE("warmup trimming drops the held samples") {
  FlockHierarchy h;
  h.pairs.push_back({"A", "G", 0.6});
  const auto tracks = synthetic_flock_tracks({"FF1"}, 0.2, 21);
  std::vector<RawTrack> subset;
  for (const auto& t : tracks)
    if (t.pigeon_id == "A" || t.pigeon_id == "G") subset.push_back(t);

  const auto plain = build_pair_datasets(subset, h, {"FF1"});
  PipelineOptions options;
  options.trim_warmup = true;
  const auto trimmed = build_pair_datasets(subset, h, {"FF1"}, options);

  REQUIRE(plain.size() == 1);
  REQUIRE(trimmed.size() == 1);
  CHECK(trimmed[0].traj.size() == plain[0].traj.size() - 3);
  CHECK(trimmed[0].traj.t0 == doctest::Approx(plain[0].traj.t0 + 0.6).epsilon(1e-12));
}

TEST_CASE("a missing track names the flight and agent") {
  auto tracks = synthetic_flock_tracks({"FF1"}, 0.1, 31);
  tracks.erase(std::remove_if(tracks.begin(), tracks.end(),
                              [](const RawTrack& t) { return t.pigeon_id == "M"; }),
               tracks.end());
  try {
    build_pair_datasets(tracks, default_hierarchy(), {"FF1"});
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("FF1") != std::string::npos);
    CHECK(what.find("'M'") != std::string::npos);
  }
}

TEST_CASE("dataset json is deterministic and well formed") {
  FlockHierarchy h;
  h.pairs.push_back({"A", "M", 0.2});
  const auto tracks = synthetic_flock_tracks({"FF1"}, 0.1, 31);
  std::vector<RawTrack> subset;
  for (const auto& t : tracks)
    if (t.pigeon_id == "A" || t.pigeon_id == "M") subset.push_back(t);
  const auto datasets = build_pair_datasets(subset, h, {"FF1"});
  REQUIRE(datasets.size() == 1);

  const std::string a = dataset_to_json(datasets[0]);
  const std::string b = dataset_to_json(datasets[0]);
  CHECK(a == b);

  const nlohmann::json doc = nlohmann::json::parse(a);
  CHECK(doc.at("follower_id").get<std::string>() == "M");
  CHECK(doc.at("leader_id").get<std::string>() == "A");
  CHECK(doc.at("flight_id").get<std::string>() == "FF1");
  CHECK(doc.at("states").size() == datasets[0].traj.size());
}
