#include "flockioc/pipeline.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace flockioc {
namespace {

constexpr double kEarthRadius = 6371000.0;  // meters

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_number(const std::string& token, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse number '" + token + "'");
  }
}

std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RawRow {
  std::string flight, pigeon;
  double t;
  Vec3 coords;  // x,y,z or lat,lon,alt depending on the file convention
};

/// Applies one derivative of a uniformly sampled series: central differences
/// inside, second-order one-sided stencils at both ends.
std::vector<Vec3> differentiate_series(const std::vector<Vec3>& f, double dt) {
  const std::size_t n = f.size();
  std::vector<Vec3> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
  return d;
}

}  // namespace

double RawTrack::sample_period(double tol) const {
  if (t.size() < 2) {
    throw std::invalid_argument("track (" + flight_id + ", " + pigeon_id +
                                "): need at least two samples");
  }
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) {
    throw std::invalid_argument("track (" + flight_id + ", " + pigeon_id +
                                "): timestamps must advance");
  }
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (std::abs(t[k + 1] - t[k] - dt) > tol) {
      throw std::invalid_argument("track (" + flight_id + ", " + pigeon_id +
                                  "): non-uniform sample spacing; resample first");
    }
  }
  return dt;
}

std::vector<RawTrack> parse_tracks(std::istream& in, TrackFormat format,
                                   const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty file");
  std::vector<std::string> header = split_fields(line);
  for (auto& h : header) h = lower(h);

  const std::vector<std::string> cartesian = {"flight_id", "pigeon_id", "t", "x", "y", "z"};
  const std::vector<std::string> geodetic = {"flight_id", "pigeon_id", "t", "lat", "lon", "alt"};
  TrackFormat detected;
  if (header == cartesian) {
    detected = TrackFormat::kCartesian;
  } else if (header == geodetic) {
    detected = TrackFormat::kGeodetic;
  } else {
    throw std::runtime_error(origin +
                             ":1: unrecognized header; expected flight_id,pigeon_id,t,x,y,z "
                             "or flight_id,pigeon_id,t,lat,lon,alt");
  }
  if (format != TrackFormat::kAuto && format != detected) {
    throw std::runtime_error(origin + ":1: file header disagrees with the requested "
                                      "coordinate convention");
  }

  std::vector<RawRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = origin + ":" + std::to_string(line_no);
    if (fields.size() != 6) {
      throw std::runtime_error(where + ": expected 6 comma-separated fields, got " +
                               std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(where + ": empty flight or pigeon id");
    }
    RawRow row;
    row.flight = fields[0];
    row.pigeon = fields[1];
    row.t = parse_number(fields[2], where);
    row.coords = Vec3(parse_number(fields[3], where), parse_number(fields[4], where),
                      parse_number(fields[5], where));
    rows.push_back(std::move(row));
  }

  // Geodetic files are projected per flight, anchored at the flight's
  // time-earliest sample (ties broken by pigeon id) so that all tracks of a
  // flight share one local frame.
  if (detected == TrackFormat::kGeodetic) {
    struct Anchor {
      double t;
      std::string pigeon;
      Vec3 coords;
      bool set = false;
    };
    std::map<std::string, Anchor> anchors;
    for (const auto& row : rows) {
      Anchor& a = anchors[row.flight];
      if (!a.set || row.t < a.t || (row.t == a.t && row.pigeon < a.pigeon)) {
        a = {row.t, row.pigeon, row.coords, true};
      }
    }
    constexpr double kDegToRad = std::numbers::pi / 180.0;
    for (auto& row : rows) {
      const Anchor& a = anchors.at(row.flight);
      const double lat0 = a.coords[0] * kDegToRad;
      const double x = kEarthRadius * std::cos(lat0) * (row.coords[1] - a.coords[1]) * kDegToRad;
      const double y = kEarthRadius * (row.coords[0] - a.coords[0]) * kDegToRad;
      const double z = row.coords[2];  // altitude is taken as recorded
      row.coords = Vec3(x, y, z);
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<const RawRow*>> grouped;
  for (const auto& row : rows) grouped[{row.flight, row.pigeon}].push_back(&row);

  std::vector<RawTrack> tracks;
  tracks.reserve(grouped.size());
  for (auto& [key, members] : grouped) {
    std::stable_sort(members.begin(), members.end(),
                     [](const RawRow* a, const RawRow* b) { return a->t < b->t; });
    RawTrack track;
    track.flight_id = key.first;
    track.pigeon_id = key.second;
    track.t.reserve(members.size());
    track.position.reserve(members.size());
    for (const RawRow* row : members) {
      if (!track.t.empty() && !(row->t > track.t.back())) {
        throw std::runtime_error("track (" + key.first + ", " + key.second +
                                 "): timestamps must be strictly increasing");
      }
      track.t.push_back(row->t);
      track.position.push_back(row->coords);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<RawTrack> load_tracks(const std::string& path, TrackFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
  return parse_tracks(in, format, path);
}

void write_tracks_csv(const std::string& path, const std::vector<RawTrack>& tracks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write data file '" + path + "'");
  out << "flight_id,pigeon_id,t,x,y,z\n";
  for (const auto& track : tracks) {
    for (std::size_t k = 0; k < track.size(); ++k) {
      out << track.flight_id << ',' << track.pigeon_id << ',' << fmt_full(track.t[k]) << ','
          << fmt_full(track.position[k][0]) << ',' << fmt_full(track.position[k][1]) << ','
          << fmt_full(track.position[k][2]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

RawTrack clip_time_window(const RawTrack& track, std::optional<double> t_start,
                          std::optional<double> t_end) {
  RawTrack out;
  out.flight_id = track.flight_id;
  out.pigeon_id = track.pigeon_id;
  for (std::size_t k = 0; k < track.size(); ++k) {
    if (t_start && track.t[k] < *t_start - 1e-9) continue;
    if (t_end && track.t[k] > *t_end + 1e-9) continue;
    out.t.push_back(track.t[k]);
    out.position.push_back(track.position[k]);
  }
  return out;
}

RawTrack resample_track(const RawTrack& track, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("resample period must be positive");
  if (track.size() < 2) {
    throw std::invalid_argument("track (" + track.flight_id + ", " + track.pigeon_id +
                                "): need at least two samples to resample");
  }
  RawTrack out;
  out.flight_id = track.flight_id;
  out.pigeon_id = track.pigeon_id;
  const double t0 = track.t.front();
  const double t_last = track.t.back();
  const auto n = static_cast<std::size_t>(std::floor((t_last - t0) / dt + 1e-9)) + 1;
  out.t.reserve(n);
  out.position.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (seg + 2 < track.size() && track.t[seg + 1] <= t) ++seg;
    const double span = track.t[seg + 1] - track.t[seg];
    const double alpha = std::clamp((t - track.t[seg]) / span, 0.0, 1.0);
    out.t.push_back(t);
    out.position.push_back((1.0 - alpha) * track.position[seg] + alpha * track.position[seg + 1]);
  }
  return out;
}

SampledTrajectory differentiate(const RawTrack& track, int smoothing_window) {
  const std::size_t n = track.size();
  if (n < 5) {
    throw std::invalid_argument("track (" + track.flight_id + ", " + track.pigeon_id +
                                "): need at least five samples to differentiate");
  }
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw std::invalid_argument("smoothing window must be a positive odd number");
  }
  if (static_cast<std::size_t>(smoothing_window) >= n) {
    throw std::invalid_argument("smoothing window must be shorter than the track");
  }
  const double dt = track.sample_period();

  std::vector<Vec3> pos = track.position;
  if (smoothing_window > 1) {
    const int half = smoothing_window / 2;
    std::vector<Vec3> smoothed(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k >= static_cast<std::size_t>(half) ? k - half : 0;
      const std::size_t hi = std::min(n - 1, k + half);
      Vec3 acc = Vec3::Zero();
      for (std::size_t j = lo; j <= hi; ++j) acc += pos[j];
      smoothed[k] = acc / static_cast<double>(hi - lo + 1);
    }
    pos = std::move(smoothed);
  }

  const std::vector<Vec3> vel = differentiate_series(pos, dt);
  const std::vector<Vec3> acc = differentiate_series(vel, dt);

  SampledTrajectory traj;
  traj.t0 = track.t.front();
  traj.dt = dt;
  traj.states.resize(6, static_cast<Eigen::Index>(n));
  traj.controls.resize(3, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    traj.states.col(static_cast<Eigen::Index>(k)) = pack_state(pos[k], vel[k]);
    traj.controls.col(static_cast<Eigen::Index>(k)) = acc[k];
  }
  return traj;
}

SampledTrajectory make_desired(const SampledTrajectory& leader, double delay) {
  leader.validate("leader trajectory");
  if (delay < 0.0) throw std::invalid_argument("delay must be nonnegative");
  const double steps = std::round(delay / leader.dt);
  if (std::abs(steps * leader.dt - delay) > 1e-9) {
    throw std::invalid_argument("delay must be an integer multiple of the sample period");
  }
  const auto shift = static_cast<Eigen::Index>(steps);
  SampledTrajectory desired;
  desired.t0 = leader.t0;
  desired.dt = leader.dt;
  const Eigen::Index n = leader.size();
  desired.states.resize(6, n);
  desired.controls.resize(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = k >= shift ? k - shift : 0;
    desired.states.col(k) = leader.states.col(src);
    desired.controls.col(k) = leader.controls.col(src);
  }
  return desired;
}

std::vector<PairDataset> build_pair_datasets(const std::vector<RawTrack>& tracks,
                                             const FlockHierarchy& hierarchy,
                                             const std::vector<std::string>& flights,
                                             const PipelineOptions& options) {
  std::map<std::pair<std::string, std::string>, const RawTrack*> by_key;
  for (const auto& track : tracks) by_key[{track.flight_id, track.pigeon_id}] = &track;

  std::vector<PairDataset> datasets;
  for (const auto& flight : flights) {
    for (const auto& pair : hierarchy.pairs) {
      auto find_track = [&](const std::string& agent) -> const RawTrack& {
        const auto it = by_key.find({flight, agent});
        if (it == by_key.end()) {
          throw std::runtime_error("flight '" + flight + "': missing track for agent '" +
                                   agent + "'");
        }
        return *it->second;
      };
      const RawTrack& leader_track = find_track(pair.leader);
      const RawTrack& follower_track = find_track(pair.follower);

      SampledTrajectory leader = differentiate(leader_track, options.smoothing_window);
      SampledTrajectory follower = differentiate(follower_track, options.smoothing_window);
      if (std::abs(leader.dt - follower.dt) > 1e-6) {
        throw std::runtime_error("flight '" + flight + "': agents '" + pair.leader + "' and '" +
                                 pair.follower + "' have different sample periods");
      }
      const double dt = leader.dt;

      const HierarchyReport report = validate_hierarchy(hierarchy, dt);
      if (!report.ok()) {
        throw std::runtime_error("flight '" + flight + "': hierarchy invalid for dt: " +
                                 report.issues.front());
      }

      SampledTrajectory desired = make_desired(leader, pair.delay);

      // Intersect the two time windows; track starts must sit on one grid.
      const double offset = (follower.t0 - desired.t0) / dt;
      const double offset_steps = std::round(offset);
      if (std::abs(offset_steps * dt - (follower.t0 - desired.t0)) > 1e-6) {
        throw std::runtime_error("flight '" + flight + "': tracks of '" + pair.leader +
                                 "' and '" + pair.follower + "' are not grid-aligned");
      }
      const double t_lo = std::max(desired.t0, follower.t0);
      const double t_hi = std::min(desired.end_time(), follower.end_time());
      auto slice = [&](const SampledTrajectory& traj) {
        const auto first = static_cast<Eigen::Index>(std::round((t_lo - traj.t0) / dt));
        const auto count = static_cast<Eigen::Index>(std::round((t_hi - t_lo) / dt)) + 1;
        if (count < 2) {
          throw std::runtime_error("flight '" + flight + "': tracks of '" + pair.leader +
                                   "' and '" + pair.follower + "' share no time window");
        }
        SampledTrajectory out;
        out.t0 = t_lo;
        out.dt = dt;
        out.states = traj.states.middleCols(first, count);
        out.controls = traj.controls.middleCols(first, count);
        return out;
      };

      PairDataset dataset;
      dataset.follower_id = pair.follower;
      dataset.leader_id = pair.leader;
      dataset.flight_id = flight;
      dataset.delay = pair.delay;
      dataset.traj = slice(follower);
      dataset.desired = slice(desired);

      if (options.trim_warmup) {
        const auto warmup = static_cast<Eigen::Index>(std::round(pair.delay / dt));
        if (dataset.traj.size() - warmup < 2) {
          throw std::runtime_error("flight '" + flight + "': dataset for '" + pair.follower +
                                   "' too short after warm-up trim");
        }
        auto drop_front = [&](SampledTrajectory& traj) {
          const Eigen::Index count = traj.size() - warmup;
          traj.states = traj.states.rightCols(count).eval();
          traj.controls = traj.controls.rightCols(count).eval();
          traj.t0 += static_cast<double>(warmup) * dt;
        };
        drop_front(dataset.traj);
        drop_front(dataset.desired);
      }
      datasets.push_back(std::move(dataset));
    }
  }
  return datasets;
}

std::string dataset_to_json(const PairDataset& dataset) {
  nlohmann::json doc;
  doc["flight_id"] = dataset.flight_id;
  doc["follower_id"] = dataset.follower_id;
  doc["leader_id"] = dataset.leader_id;
  doc["delay"] = dataset.delay;
  doc["t0"] = dataset.traj.t0;
  doc["dt"] = dataset.traj.dt;
  doc["samples"] = dataset.traj.size();
  auto matrix_to_rows = [](const auto& m) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      std::vector<double> row(static_cast<std::size_t>(m.rows()));
      for (Eigen::Index i = 0; i < m.rows(); ++i) row[static_cast<std::size_t>(i)] = m(i, k);
      rows.push_back(std::move(row));
    }
    return rows;
  };
  doc["states"] = matrix_to_rows(dataset.traj.states);
  doc["controls"] = matrix_to_rows(dataset.traj.controls);
  doc["desired"] = matrix_to_rows(dataset.desired.states);
  return doc.dump(2);
}

}  // namespace flockioc
