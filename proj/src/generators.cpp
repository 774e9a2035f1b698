#include "flockioc/generators.hpp"

#include "flockioc/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace flockioc {
namespace {

struct Motion {
  Vec3 position;
  Vec3 velocity;
  Vec3 acceleration;
};

SampledTrajectory sample_motion(const std::function<Motion(double)>& motion, double t0,
                                double dt, Eigen::Index n) {
  SampledTrajectory traj;
  traj.t0 = t0;
  traj.dt = dt;
  traj.states.resize(6, n);
  traj.controls.resize(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Motion m = motion(t0 + static_cast<double>(k) * dt);
    traj.states.col(k) = pack_state(m.position, m.velocity);
    traj.controls.col(k) = m.acceleration;
  }
  return traj;
}

/// Sum of sine terms a*sin(w t + p) per axis with exact derivatives.
struct Tone {
  double amplitude, frequency, phase;
};
Motion evaluate_tones(const std::vector<Tone> (&axes)[3], const Vec3& drift, double t) {
  Motion m{Vec3::Zero(), drift, Vec3::Zero()};
  for (int axis = 0; axis < 3; ++axis) {
    m.position[axis] = drift[axis] * t;
    for (const Tone& tone : axes[axis]) {
      const double arg = tone.frequency * t + tone.phase;
      m.position[axis] += tone.amplitude * std::sin(arg);
      m.velocity[axis] += tone.amplitude * tone.frequency * std::cos(arg);
      m.acceleration[axis] -= tone.amplitude * tone.frequency * tone.frequency * std::sin(arg);
    }
  }
  return m;
}

SampledTrajectory polyline_trajectory(const std::string& path, double t0, double dt,
                                      Eigen::Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open polyline file '" + path + "'");
  std::vector<double> t;
  std::vector<Vec3> p;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line;
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    if (body[first] == '#') continue;
    std::stringstream ss(body);
    std::string field;
    std::vector<double> values;
    while (std::getline(ss, field, ',')) values.push_back(std::stod(field));
    if (values.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 't,x,y,z' waypoint");
    }
    if (!t.empty() && values[0] <= t.back()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": waypoint times must be strictly increasing");
    }
    t.push_back(values[0]);
    p.emplace_back(values[1], values[2], values[3]);
  }
  if (t.size() < 2) throw std::runtime_error(path + ": need at least two waypoints");

  auto motion = [t, p](double when) -> Motion {
    std::size_t seg = 0;
    while (seg + 2 < t.size() && t[seg + 1] <= when) ++seg;
    const double span = t[seg + 1] - t[seg];
    const Vec3 slope = (p[seg + 1] - p[seg]) / span;
    if (when <= t.front()) return {p.front(), slope, Vec3::Zero()};
    if (when >= t.back()) return {p.back(), Vec3::Zero(), Vec3::Zero()};
    const double alpha = (when - t[seg]) / span;
    return {p[seg] + alpha * (p[seg + 1] - p[seg]), slope, Vec3::Zero()};
  };
  return sample_motion(motion, t0, dt, n);
}

SampledTrajectory csv_trajectory(const std::string& path, double t0, double dt,
                                 Eigen::Index n) {
  const std::vector<RawTrack> tracks = load_tracks(path);
  if (tracks.size() != 1) {
    throw std::runtime_error("leader CSV '" + path + "' must contain exactly one track, found " +
                             std::to_string(tracks.size()));
  }
  const double t_end = t0 + static_cast<double>(n - 1) * dt;
  RawTrack clipped = clip_time_window(tracks.front(), t0, t_end);
  if (clipped.size() < 2) {
    throw std::runtime_error("leader CSV '" + path + "' has no samples inside the requested window");
  }
  return differentiate(resample_track(clipped, dt));
}

}  // namespace

SampledTrajectory make_leader_trajectory(const std::string& spec, double t0, double dt,
                                         Eigen::Index n) {
  if (!(dt > 0.0)) throw std::invalid_argument("leader trajectory: dt must be positive");
  if (n < 2) throw std::invalid_argument("leader trajectory: need at least two samples");

  if (spec == "sinusoid") {
    // Multiple tones per axis keep the tracking problem persistently excited,
    // which the weight recovery needs for a well-conditioned Gram matrix.
    static const std::vector<Tone> axes[3] = {
        {{1.0, 1.0, 0.0}, {0.4, 2.3, 0.0}},
        {{1.0, 0.8, std::numbers::pi / 2}, {0.4, 1.9, std::numbers::pi / 2}},
        {{0.7, 1.3, 0.0}, {0.3, 0.6, 0.0}},
    };
    return sample_motion(
        [&](double t) { return evaluate_tones(axes, Vec3(0.0, 0.0, 0.05), t); }, t0, dt, n);
  }
  if (spec == "sinusoid-x") {
    static const std::vector<Tone> axes[3] = {{{1.0, 1.0, 0.0}, {0.4, 2.3, 0.0}}, {}, {}};
    return sample_motion([&](double t) { return evaluate_tones(axes, Vec3::Zero(), t); }, t0,
                         dt, n);
  }
  if (spec == "sinusoid-y") {
    static const std::vector<Tone> axes[3] = {{}, {{1.0, 1.0, 0.0}, {0.4, 1.7, 0.0}}, {}};
    return sample_motion([&](double t) { return evaluate_tones(axes, Vec3::Zero(), t); }, t0,
                         dt, n);
  }
  if (spec == "line") {
    const Vec3 velocity(1.0, 0.5, 0.1);
    return sample_motion(
        [&](double t) {
          return Motion{velocity * t, velocity, Vec3::Zero()};
        },
        t0, dt, n);
  }
  if (spec == "zero") {
    return sample_motion([](double) { return Motion{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()}; },
                         t0, dt, n);
  }
  if (spec.rfind("polyline:", 0) == 0) return polyline_trajectory(spec.substr(9), t0, dt, n);
  if (spec.rfind("csv:", 0) == 0) return csv_trajectory(spec.substr(4), t0, dt, n);
  throw std::invalid_argument("unknown leader trajectory spec '" + spec + "'");
}

}  // namespace flockioc
