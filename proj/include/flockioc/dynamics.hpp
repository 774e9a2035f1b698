#pragma once

#include "flockioc/types.hpp"

namespace flockioc {

/// Double-integrator system matrix A = [[0, I], [0, 0]].
const Mat6& state_matrix();
/// Input matrix B = [0; I]: controls are accelerations.
const Mat63& input_matrix();

/// Continuous-time dynamics f(x, u) = A x + B u.
Vec6 state_derivative(const Vec6& x, const Vec3& u);

/// Nine quadratic cost features: six squared tracking errors
/// (x_des - x entrywise) followed by the three squared controls. The running
/// cost is the dot product of a weight vector with this basis.
Vec9 cost_basis(const Vec6& x, const Vec6& x_des, const Vec3& u);

/// Gradient of the basis with respect to the state, laid out
/// (state component, basis index): entry (m, k) = d basis_k / d x_m.
Mat69 cost_basis_grad_state(const Vec6& x, const Vec6& x_des);
/// Gradient with respect to the control: entry (m, k) = d basis_k / d u_m.
Mat39 cost_basis_grad_control(const Vec3& u);

/// Transposed Jacobian of the dynamics wrt the state: (m, k) = d f_k / d x_m.
Mat6 dynamics_grad_state();
/// Transposed Jacobian of the dynamics wrt the control: (m, k) = d f_k / d u_m.
Mat36 dynamics_grad_control();

/// weights.c dot cost_basis == (x_des-x)' Q (x_des-x) + u' R u.
double running_cost(const WeightVector& weights, const Vec6& x, const Vec6& x_des,
                    const Vec3& u);

}  // namespace flockioc
