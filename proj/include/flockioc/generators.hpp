#pragma once

#include "flockioc/types.hpp"

#include <string>

namespace flockioc {

/// Builds a leader trajectory for synthetic data on the grid t0 + k*dt,
/// k = 0..n-1, with analytically consistent velocities. Supported specs:
///   "sinusoid"    multi-tone sinusoid exciting all three axes (default)
///   "sinusoid-x"  sinusoid along x only
///   "sinusoid-y"  sinusoid along y only
///   "line"        constant-velocity straight line
///   "zero"        stationary at the origin
///   "polyline:<file>"  piecewise-linear path through `t,x,y,z` waypoints
///   "csv:<file>"       single-track CSV, windowed to the grid and resampled
SampledTrajectory make_leader_trajectory(const std::string& spec, double t0, double dt,
                                         Eigen::Index n);

}  // namespace flockioc
