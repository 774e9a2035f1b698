#include "flockioc/lqt.hpp"

#include "flockioc/dynamics.hpp"
#include "flockioc/pipeline.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace flockioc {
namespace {

/// Trapezoidal quadrature weight of sample k on an n-sample grid.
double trapezoid_weight(Eigen::Index k, Eigen::Index n, double dt) {
  return (k == 0 || k == n - 1) ? 0.5 * dt : dt;
}

}  // namespace

RiccatiSweep sweep_tracking(const WeightVector& weights, const SampledTrajectory& desired) {
  weights.validate_forward("tracking weights");
  desired.validate("desired trajectory");

  const Mat6& A = state_matrix();
  const Vec6 q = weights.q_diag();
  const Vec3 r_inv = weights.r_diag().cwiseInverse();
  Mat6 b_rinv_bt = Mat6::Zero();  // B R^-1 B'
  b_rinv_bt.bottomRightCorner<3, 3>() = r_inv.asDiagonal();
  const Mat6 q_mat = q.asDiagonal();

  // d/dt of (S, s):
  //   S' = -(A'S + SA - S B R^-1 B' S + Q)
  //   s' = -((A - B R^-1 B' S)' s - Q x_des)
  auto derivative = [&](const Mat6& S, const Vec6& s, const Vec6& x_des) {
    const Mat6 s_dot_quad = -(A.transpose() * S + S * A - S * b_rinv_bt * S + q_mat);
    const Vec6 s_dot_lin = -((A - b_rinv_bt * S).transpose() * s - q.cwiseProduct(x_des));
    return std::make_pair(s_dot_quad, s_dot_lin);
  };

  const Eigen::Index n = desired.size();
  RiccatiSweep sweep;
  sweep.t0 = desired.t0;
  sweep.dt = desired.dt;
  sweep.S.assign(static_cast<std::size_t>(n), Mat6::Zero());
  sweep.s.assign(static_cast<std::size_t>(n), Vec6::Zero());

  const double h = -desired.dt;  // backward RK4 step
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const Vec6 xd_here = desired.states.col(k);
    const Vec6 xd_prev = desired.states.col(k - 1);
    const Vec6 xd_mid = 0.5 * (xd_here + xd_prev);

    const Mat6& S1 = sweep.S[static_cast<std::size_t>(k)];
    const Vec6& s1 = sweep.s[static_cast<std::size_t>(k)];
    const auto [k1S, k1s] = derivative(S1, s1, xd_here);
    const auto [k2S, k2s] = derivative(S1 + 0.5 * h * k1S, s1 + 0.5 * h * k1s, xd_mid);
    const auto [k3S, k3s] = derivative(S1 + 0.5 * h * k2S, s1 + 0.5 * h * k2s, xd_mid);
    const auto [k4S, k4s] = derivative(S1 + h * k3S, s1 + h * k3s, xd_prev);

    Mat6 S0 = S1 + (h / 6.0) * (k1S + 2.0 * k2S + 2.0 * k3S + k4S);
    S0 = 0.5 * (S0 + S0.transpose());  // keep symmetry against roundoff drift
    sweep.S[static_cast<std::size_t>(k - 1)] = S0;
    sweep.s[static_cast<std::size_t>(k - 1)] = s1 + (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
  }
  return sweep;
}

SampledTrajectory solve_tracking(const WeightVector& weights,
                                 const SampledTrajectory& desired, const Vec6& x0) {
  if (!x0.allFinite()) throw std::invalid_argument("solve_tracking: non-finite initial state");
  const RiccatiSweep sweep = sweep_tracking(weights, desired);

  const Mat63& B = input_matrix();
  const Vec3 r_inv = weights.r_diag().cwiseInverse();
  auto feedback = [&](const Mat6& S, const Vec6& s, const Vec6& x) -> Vec3 {
    return -r_inv.cwiseProduct(B.transpose() * (S * x + s));
  };
  auto x_dot = [&](const Vec6& x, const Mat6& S, const Vec6& s) {
    return state_derivative(x, feedback(S, s, x));
  };

  const Eigen::Index n = desired.size();
  const double dt = desired.dt;
  SampledTrajectory traj;
  traj.t0 = desired.t0;
  traj.dt = dt;
  traj.states.resize(6, n);
  traj.controls.resize(3, n);

  Vec6 x = x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    traj.states.col(k) = x;
    traj.controls.col(k) = feedback(sweep.S[i], sweep.s[i], x);
    if (k + 1 < n) {
      const Mat6 S_mid = 0.5 * (sweep.S[i] + sweep.S[i + 1]);
      const Vec6 s_mid = 0.5 * (sweep.s[i] + sweep.s[i + 1]);
      const Vec6 k1 = x_dot(x, sweep.S[i], sweep.s[i]);
      const Vec6 k2 = x_dot(x + 0.5 * dt * k1, S_mid, s_mid);
      const Vec6 k3 = x_dot(x + 0.5 * dt * k2, S_mid, s_mid);
      const Vec6 k4 = x_dot(x + dt * k3, sweep.S[i + 1], sweep.s[i + 1]);
      x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return traj;
}

SampledTrajectory direct_qp_oracle(const WeightVector& weights,
                                   const SampledTrajectory& desired, const Vec6& x0) {
  weights.validate_forward("tracking weights");
  desired.validate("desired trajectory");
  if (!x0.allFinite()) throw std::invalid_argument("direct_qp_oracle: non-finite initial state");

  const Eigen::Index n = desired.size();
  const Eigen::Index num_vars = 9 * n;  // per knot: 6 states then 3 controls
  if (num_vars > 50000) {
    throw std::invalid_argument("direct_qp_oracle: instance has " + std::to_string(num_vars) +
                                " decision variables (limit 50000)");
  }
  const Eigen::Index num_cons = 6 + 6 * (n - 1);
  const Eigen::Index dim = num_vars + num_cons;
  const double dt = desired.dt;
  const Vec6 q = weights.q_diag();
  const Vec3 r = weights.r_diag();

  auto x_col = [](Eigen::Index k) { return 9 * k; };
  auto u_col = [](Eigen::Index k) { return 9 * k + 6; };

  std::vector<Eigen::Triplet<double>> kkt;
  kkt.reserve(static_cast<std::size_t>(60 * n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  // Objective: trapezoidal quadrature of the running cost.
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = trapezoid_weight(k, n, dt);
    for (int i = 0; i < 6; ++i) {
      kkt.emplace_back(x_col(k) + i, x_col(k) + i, 2.0 * w * q[i]);
      rhs[x_col(k) + i] = 2.0 * w * q[i] * desired.states(i, k);  // -g
    }
    for (int i = 0; i < 3; ++i) {
      kkt.emplace_back(u_col(k) + i, u_col(k) + i, 2.0 * w * r[i]);
    }
  }

  // Constraints: initial state, then trapezoidal collocation of the dynamics
  //   x_{k+1} - x_k - dt/2 (A x_k + B u_k + A x_{k+1} + B u_{k+1}) = 0.
  auto add_constraint = [&](Eigen::Index row, Eigen::Index col, double value) {
    kkt.emplace_back(num_vars + row, col, value);
    kkt.emplace_back(col, num_vars + row, value);  // KKT symmetry
  };
  for (int i = 0; i < 6; ++i) {
    add_constraint(i, x_col(0) + i, 1.0);
    rhs[num_vars + i] = x0[i];
  }
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Eigen::Index row0 = 6 + 6 * k;
    for (int i = 0; i < 6; ++i) {
      add_constraint(row0 + i, x_col(k) + i, -1.0);
      add_constraint(row0 + i, x_col(k + 1) + i, 1.0);
    }
    for (int i = 0; i < 3; ++i) {
      // A couples position row i to velocity entry i+3; B feeds control i
      // into velocity row i+3.
      add_constraint(row0 + i, x_col(k) + i + 3, -0.5 * dt);
      add_constraint(row0 + i, x_col(k + 1) + i + 3, -0.5 * dt);
      add_constraint(row0 + i + 3, u_col(k) + i, -0.5 * dt);
      add_constraint(row0 + i + 3, u_col(k + 1) + i, -0.5 * dt);
    }
  }

  Eigen::SparseMatrix<double> K(dim, dim);
  K.setFromTriplets(kkt.begin(), kkt.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(K);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("direct_qp_oracle: KKT factorization failed (singular system)");
  }
  const Eigen::VectorXd z = solver.solve(rhs);
  const double residual = (K * z - rhs).cwiseAbs().maxCoeff() /
                          std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (solver.info() != Eigen::Success || !z.allFinite() || residual > 1e-6) {
    std::ostringstream msg;
    msg << "direct_qp_oracle: KKT solve unreliable (relative residual " << residual
        << "); the system is singular or severely ill-conditioned";
    throw std::runtime_error(msg.str());
  }

  SampledTrajectory traj;
  traj.t0 = desired.t0;
  traj.dt = dt;
  traj.states.resize(6, n);
  traj.controls.resize(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    traj.states.col(k) = z.segment<6>(x_col(k));
    traj.controls.col(k) = z.segment<3>(u_col(k));
  }
  return traj;
}

double trajectory_cost(const WeightVector& weights, const SampledTrajectory& traj,
                       const SampledTrajectory& desired) {
  traj.validate("trajectory");
  desired.validate("desired trajectory");
  require_same_grid(traj, desired, "trajectory_cost");
  const Eigen::Index n = traj.size();
  double cost = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cost += trapezoid_weight(k, n, traj.dt) *
            running_cost(weights, traj.states.col(k), desired.states.col(k), traj.controls.col(k));
  }
  return cost;
}

std::map<std::string, SampledTrajectory> rollout_hierarchy(
    const FlockHierarchy& hierarchy, const SampledTrajectory& leader_traj,
    const std::map<std::string, WeightVector>& weights,
    const std::map<std::string, Vec6>& initial_states) {
  leader_traj.validate("leader trajectory");
  const HierarchyReport report = validate_hierarchy(hierarchy, leader_traj.dt);
  if (!report.ok()) {
    std::string msg = "rollout_hierarchy: invalid hierarchy:";
    for (const auto& issue : report.issues) msg += " " + issue + ";";
    throw std::invalid_argument(msg);
  }
  const std::set<std::string> roots = hierarchy.root_leaders();
  if (roots.size() != 1) {
    throw std::invalid_argument("rollout_hierarchy: hierarchy must have exactly one root leader");
  }

  std::map<std::string, SampledTrajectory> out;
  out[*roots.begin()] = leader_traj;
  for (const std::string& follower : hierarchy.topological_followers()) {
    const LeaderFollowerPair* pair = hierarchy.pair_for(follower);
    const SampledTrajectory& lead = out.at(pair->leader);
    const SampledTrajectory desired = make_desired(lead, pair->delay);
    const auto w_it = weights.find(follower);
    if (w_it == weights.end()) {
      throw std::invalid_argument("rollout_hierarchy: missing weights for follower '" +
                                  follower + "'");
    }
    const auto x0_it = initial_states.find(follower);
    const Vec6 x0 = x0_it != initial_states.end() ? x0_it->second : Vec6(desired.states.col(0));
    try {
      out[follower] = solve_tracking(w_it->second, desired, x0);
    } catch (const std::exception& e) {
      throw std::runtime_error("follower '" + follower + "': " + e.what());
    }
  }
  return out;
}

}  // namespace flockioc
