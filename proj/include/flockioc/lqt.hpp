#pragma once

#include "flockioc/hierarchy.hpp"
#include "flockioc/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace flockioc {

/// Backward value-function sweep of the finite-horizon tracking problem:
/// cost-to-go x'S(t)x + 2 s(t)'x + const on the sample grid, with S and s
/// zero at the final sample (no terminal cost).
struct RiccatiSweep {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Mat6> S;
  std::vector<Vec6> s;
};

/// Integrates the Riccati and feedforward equations backward with fixed-step
/// RK4 on the desired trajectory's grid (desired states linearly interpolated
/// at half steps).
RiccatiSweep sweep_tracking(const WeightVector& weights, const SampledTrajectory& desired);

/// Solves the tracking problem min integral (x_des-x)'Q(x_des-x) + u'Ru dt for
/// the double integrator, x(t0) = x0, free final state. Returns the optimal
/// trajectory on the desired grid; the control at the final sample is zero by
/// the free-endpoint condition.
SampledTrajectory solve_tracking(const WeightVector& weights,
                                 const SampledTrajectory& desired, const Vec6& x0);

/// Independent cross-check of solve_tracking: trapezoidal collocation of the
/// same problem as a sparse equality-constrained QP, solved through its KKT
/// system. Refuses instances above 50,000 decision variables and singular KKT
/// systems (reporting a residual-based condition estimate).
SampledTrajectory direct_qp_oracle(const WeightVector& weights,
                                   const SampledTrajectory& desired, const Vec6& x0);

/// Trapezoidal quadrature of the running cost along a sampled trajectory.
double trajectory_cost(const WeightVector& weights, const SampledTrajectory& traj,
                       const SampledTrajectory& desired);

/// Simulates the whole flock: the root leader flies `leader_traj`, every
/// follower optimally tracks its delayed leader in topological order. Initial
/// states default to each follower's first desired sample; `initial_states`
/// overrides per agent. Solver failures are tagged with the follower id.
std::map<std::string, SampledTrajectory> rollout_hierarchy(
    const FlockHierarchy& hierarchy, const SampledTrajectory& leader_traj,
    const std::map<std::string, WeightVector>& weights,
    const std::map<std::string, Vec6>& initial_states = {});

}  // namespace flockioc
