#include "flockioc/dynamics.hpp"

namespace flockioc {

const Mat6& state_matrix() {
  static const Mat6 A = [] {
    Mat6 a = Mat6::Zero();
    a.topRightCorner<3, 3>().setIdentity();
    return a;
  }();
  return A;
}

const Mat63& input_matrix() {
  static const Mat63 B = [] {
    Mat63 b = Mat63::Zero();
    b.bottomRows<3>().setIdentity();
    return b;
  }();
  return B;
}

Vec6 state_derivative(const Vec6& x, const Vec3& u) {
  Vec6 dx;
  dx.head<3>() = velocity_of(x);
  dx.tail<3>() = u;
  return dx;
}

Vec9 cost_basis(const Vec6& x, const Vec6& x_des, const Vec3& u) {
  Vec9 phi;
  phi.head<6>() = (x_des - x).array().square();
  phi.tail<3>() = u.array().square();
  return phi;
}

Mat69 cost_basis_grad_state(const Vec6& x, const Vec6& x_des) {
  Mat69 g = Mat69::Zero();
  const Vec6 err = x_des - x;
  for (int i = 0; i < 6; ++i) g(i, i) = -2.0 * err[i];
  return g;
}

Mat39 cost_basis_grad_control(const Vec3& u) {
  Mat39 g = Mat39::Zero();
  for (int i = 0; i < 3; ++i) g(i, 6 + i) = 2.0 * u[i];
  return g;
}

Mat6 dynamics_grad_state() { return state_matrix().transpose(); }

Mat36 dynamics_grad_control() { return input_matrix().transpose(); }

double running_cost(const WeightVector& weights, const Vec6& x, const Vec6& x_des,
                    const Vec3& u) {
  return weights.c.dot(cost_basis(x, x_des, u));
}

}  // namespace flockioc
