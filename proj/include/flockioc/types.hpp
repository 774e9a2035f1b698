#pragma once

#include <Eigen/Dense>

#include <string>

namespace flockioc {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat69 = Eigen::Matrix<double, 6, 9>;
using Mat39 = Eigen::Matrix<double, 3, 9>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// State layout used everywhere: [x, y, z, vx, vy, vz].
inline Vec6 pack_state(const Vec3& position, const Vec3& velocity) {
  Vec6 state;
  state << position, velocity;
  return state;
}
inline Vec3 position_of(const Vec6& state) { return state.head<3>(); }
inline Vec3 velocity_of(const Vec6& state) { return state.tail<3>(); }

/// Uniformly sampled state/control history of one agent on one flight.
/// Column k of `states` and `controls` belongs to time t0 + k*dt.
struct SampledTrajectory {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::Matrix<double, 6, Eigen::Dynamic> states;
  Eigen::Matrix<double, 3, Eigen::Dynamic> controls;

  Eigen::Index size() const { return states.cols(); }
  double time_at(Eigen::Index k) const { return t0 + static_cast<double>(k) * dt; }
  double end_time() const { return time_at(size() - 1); }
  double duration() const { return end_time() - t0; }

  /// Throws std::invalid_argument unless dt > 0, states and controls are
  /// equally long with at least two samples, and every entry is finite.
  void validate(const std::string& what = "trajectory") const;
};

/// True when both trajectories live on the same uniform grid (t0, dt, length).
bool same_grid(const SampledTrajectory& a, const SampledTrajectory& b, double tol = 1e-9);
void require_same_grid(const SampledTrajectory& a, const SampledTrajectory& b,
                       const std::string& what);

/// Diagonal tracking/control cost weights stacked as
/// [q_x, q_y, q_z, q_vx, q_vy, q_vz, r_x, r_y, r_z], with one entry pinned to
/// a known value to fix the scale of the cost.
struct WeightVector {
  static constexpr int kDim = 9;

  Vec9 c = Vec9::Ones();
  int known_index = 8;  ///< 0-based position of the pinned entry (default: r_z)
  double known_value = 1.0;

  /// Builds a weight vector pinned at `known_index` to its value in `values`.
  static WeightVector pinned(const Vec9& values, int known_index);

  Vec6 q_diag() const { return c.head<6>(); }
  Vec3 r_diag() const { return c.tail<3>(); }

  bool pin_consistent() const { return c[known_index] == known_value; }
  /// Weights admit a forward tracking problem: Q >= 0 and R > 0 entrywise.
  bool forward_valid() const;
  void validate_forward(const std::string& what = "weights") const;
};

}  // namespace flockioc
