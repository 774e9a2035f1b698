#include "flockioc/ioc.hpp"

#include "flockioc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flockioc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double trapezoid_weight(Eigen::Index k, Eigen::Index n, double dt) {
  return (k == 0 || k == n - 1) ? 0.5 * dt : dt;
}

/// Shared reduction: spectrum of N' W N plus the right-hand-side coupling of
/// the pinned column, computed once for both solving and diagnostics.
struct ReducedGram {
  Eigen::MatrixXd selection;            // N, dim x (dim-1)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen;  // of N' W N
  Eigen::VectorXd sigma;                // |eigenvalues|, ascending with them
  double sigma_max = 0.0;
};

ReducedGram reduce(const Mat9& W, int known_index) {
  ReducedGram red;
  red.selection = build_selection(known_index);
  const Eigen::MatrixXd reduced = red.selection.transpose() * W * red.selection;
  red.eigen.compute(0.5 * (reduced + reduced.transpose()));
  if (red.eigen.info() != Eigen::Success) {
    throw std::runtime_error("solve_weights: eigendecomposition failed");
  }
  red.sigma = red.eigen.eigenvalues().cwiseAbs();
  red.sigma_max = red.sigma.maxCoeff();
  return red;
}

}  // namespace

CostateBasisSeries integrate_costate_basis(const SampledTrajectory& traj,
                                           const SampledTrajectory& desired) {
  traj.validate("trajectory");
  desired.validate("desired trajectory");
  require_same_grid(traj, desired, "integrate_costate_basis");

  const Eigen::Index n = traj.size();
  const Mat6 a_t = dynamics_grad_state();  // A'

  // Forcing G(t) = -(basis gradient wrt state); it is linear in the tracking
  // error, so interpolating the states is the same as interpolating G.
  auto forcing = [&](const Vec6& x, const Vec6& x_des) -> Mat69 {
    return -cost_basis_grad_state(x, x_des);
  };
  auto derivative = [&](const Mat69& L, const Mat69& G) -> Mat69 { return G - a_t * L; };

  CostateBasisSeries series;
  series.t0 = traj.t0;
  series.dt = traj.dt;
  series.L.assign(static_cast<std::size_t>(n), Mat69::Zero());

  const double h = -traj.dt;  // backward RK4 step from the free final costate
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const Mat69 g_here = forcing(traj.states.col(k), desired.states.col(k));
    const Mat69 g_prev = forcing(traj.states.col(k - 1), desired.states.col(k - 1));
    const Mat69 g_mid = forcing(0.5 * (traj.states.col(k) + traj.states.col(k - 1)),
                                0.5 * (desired.states.col(k) + desired.states.col(k - 1)));
    const Mat69& L1 = series.L[static_cast<std::size_t>(k)];
    const Mat69 k1 = derivative(L1, g_here);
    const Mat69 k2 = derivative(L1 + 0.5 * h * k1, g_mid);
    const Mat69 k3 = derivative(L1 + 0.5 * h * k2, g_mid);
    const Mat69 k4 = derivative(L1 + h * k3, g_prev);
    series.L[static_cast<std::size_t>(k - 1)] = L1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return series;
}

GramMatrix assemble_gram_single(const SampledTrajectory& traj,
                                const SampledTrajectory& desired,
                                const CostateBasisSeries& basis) {
  traj.validate("trajectory");
  desired.validate("desired trajectory");
  require_same_grid(traj, desired, "assemble_gram_single");
  const Eigen::Index n = traj.size();
  if (basis.size() != n || std::abs(basis.t0 - traj.t0) > 1e-9 ||
      std::abs(basis.dt - traj.dt) > 1e-9) {
    throw std::invalid_argument("assemble_gram_single: costate basis grid mismatch");
  }

  const Mat36 b_t = dynamics_grad_control();  // B'
  Mat9 W = Mat9::Zero();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Mat39 w1 =
        cost_basis_grad_control(traj.controls.col(k)) + b_t * basis.L[static_cast<std::size_t>(k)];
    W += trapezoid_weight(k, n, traj.dt) * (w1.transpose() * w1);
  }
  W = 0.5 * (W + W.transpose());

  GramMatrix gram;
  gram.W = W;
  gram.flight_count = 1;
  return gram;
}

GramMatrix assemble_gram_single(const SampledTrajectory& traj,
                                const SampledTrajectory& desired) {
  return assemble_gram_single(traj, desired, integrate_costate_basis(traj, desired));
}

GramMatrix assemble_gram_multi(const std::vector<FlightData>& flights) {
  if (flights.empty()) {
    throw std::invalid_argument("assemble_gram_multi: need at least one flight");
  }
  GramMatrix gram;
  gram.W = Mat9::Zero();
  gram.flight_count = static_cast<int>(flights.size());
  for (std::size_t j = 0; j < flights.size(); ++j) {
    try {
      gram.W += assemble_gram_single(flights[j].traj, flights[j].desired).W;
    } catch (const std::exception& e) {
      throw std::runtime_error("flight " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  return gram;
}

Eigen::MatrixXd build_selection(int known_index, int dim) {
  if (dim < 2) throw std::invalid_argument("build_selection: dimension must be at least 2");
  if (known_index < 0 || known_index >= dim) {
    throw std::invalid_argument("build_selection: pinned index out of range");
  }
  Eigen::MatrixXd selection = Eigen::MatrixXd::Zero(dim, dim - 1);
  for (int j = 0; j < dim - 1; ++j) {
    selection(j < known_index ? j : j + 1, j) = 1.0;
  }
  return selection;
}

IocSolution solve_weights(const GramMatrix& gram, int known_index, double known_value,
                          const SolveOptions& options) {
  if (known_index < 0 || known_index >= WeightVector::kDim) {
    throw std::invalid_argument("solve_weights: pinned index out of range");
  }
  if (known_value == 0.0 || !std::isfinite(known_value)) {
    throw std::invalid_argument("solve_weights: known value must be nonzero and finite");
  }
  const Mat9& W = gram.W;
  if (!W.allFinite()) throw std::invalid_argument("solve_weights: non-finite Gram matrix");
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("solve_weights: Gram matrix is not symmetric");
  }
  {
    const Eigen::SelfAdjointEigenSolver<Mat9> full(W);
    const double lambda_max = std::max(full.eigenvalues().maxCoeff(), 0.0);
    if (full.eigenvalues().minCoeff() < -1e-8 * std::max(lambda_max, 1e-300)) {
      throw std::invalid_argument("solve_weights: Gram matrix is indefinite");
    }
  }

  const ReducedGram red = reduce(W, known_index);
  const int m = static_cast<int>(red.sigma.size());
  const double cutoff = options.uniqueness_tol * red.sigma_max;

  // Stationarity of c'Wc over the unknown entries:
  //   (N'WN) c_unknown = -known_value (N'W e_pinned)
  // solved through the eigendecomposition; directions below the cutoff take
  // the minimum-norm (pseudoinverse) value zero.
  const Eigen::VectorXd rhs =
      -known_value * (red.selection.transpose() * W.col(known_index));
  const Eigen::VectorXd projected = red.eigen.eigenvectors().transpose() * rhs;
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(m);
  bool unique = red.sigma_max > 0.0;
  for (int i = 0; i < m; ++i) {
    if (red.sigma[i] > cutoff) {
      coeffs[i] = projected[i] / red.eigen.eigenvalues()[i];
    } else {
      unique = false;
    }
  }
  Eigen::VectorXd c_unknown = red.eigen.eigenvectors() * coeffs;

  IocSolution solution;
  if (options.clip_small_negatives) {
    const double eps_clip = 1e-6 * c_unknown.cwiseAbs().maxCoeff();
    for (int j = 0; j < m; ++j) {
      if (c_unknown[j] < 0.0 && c_unknown[j] > -eps_clip) {
        c_unknown[j] = 0.0;
        solution.negatives_clipped.push_back(j < known_index ? j : j + 1);
      }
    }
  }

  Vec9 c = Vec9::Zero();
  for (int j = 0; j < m; ++j) c[j < known_index ? j : j + 1] = c_unknown[j];
  c[known_index] = known_value;

  solution.c_hat.c = c;
  solution.c_hat.known_index = known_index;
  solution.c_hat.known_value = known_value;
  solution.unique = unique;
  solution.residual = c.dot(W * c);
  const double sigma_min = red.sigma.minCoeff();
  solution.r_w = (red.sigma_max > 0.0 && sigma_min > 0.0) ? red.sigma_max / sigma_min : kInf;
  return solution;
}

GramDiagnostics diagnose(const GramMatrix& gram, int known_index) {
  if (known_index < 0 || known_index >= WeightVector::kDim) {
    throw std::invalid_argument("diagnose: pinned index out of range");
  }
  const ReducedGram red = reduce(gram.W, known_index);
  const int m = static_cast<int>(red.sigma.size());
  const double cutoff = 1e-12 * red.sigma_max;

  GramDiagnostics diag;
  diag.singular_values.resize(m);
  std::vector<int> null_dirs;
  int rank = 0;
  // The eigenvalues ascend, but their magnitudes need not once tiny negative
  // ones enter, so sort the reported spectrum explicitly.
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&red](int a, int b) { return red.sigma[a] > red.sigma[b]; });
  for (int i = 0; i < m; ++i) {
    diag.singular_values[i] = red.sigma[order[static_cast<std::size_t>(i)]];
    if (red.sigma_max > 0.0 && red.sigma[i] > cutoff) {
      ++rank;
    } else {
      null_dirs.push_back(i);
    }
  }
  diag.rank = rank;
  const double sigma_min = red.sigma.minCoeff();
  diag.r_w = (red.sigma_max > 0.0 && sigma_min > 0.0) ? red.sigma_max / sigma_min : kInf;
  diag.null_space.resize(WeightVector::kDim, static_cast<Eigen::Index>(null_dirs.size()));
  for (std::size_t j = 0; j < null_dirs.size(); ++j) {
    diag.null_space.col(static_cast<Eigen::Index>(j)) =
        red.selection * red.eigen.eigenvectors().col(null_dirs[j]);
  }
  return diag;
}

}  // namespace flockioc
