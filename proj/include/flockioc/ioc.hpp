#pragma once

#include "flockioc/types.hpp"

#include <string>
#include <vector>

namespace flockioc {

/// Time series of the 6x9 costate basis L(t): along an optimal trajectory the
/// costate factors as p(t) = L(t) c, with c the stacked cost weights. L obeys
/// L' = -(basis gradient wrt state) - A' L backward from L(t_f) = 0, so it
/// depends on the data but not on the unknown weights.
struct CostateBasisSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Mat69> L;

  Eigen::Index size() const { return static_cast<Eigen::Index>(L.size()); }
};

/// Accumulated stationarity Gram matrix W = integral W1(t)' W1(t) dt where
/// W1(t) = (basis gradient wrt control) + B' L(t) is the coefficient of the
/// Hamiltonian's control stationarity condition: W1(t) c = 0 on optimal data.
/// The best weight estimate minimizes c' W c subject to the pinned entry.
struct GramMatrix {
  Mat9 W = Mat9::Zero();
  int flight_count = 0;
};

struct IocSolution {
  WeightVector c_hat;
  double r_w = 0.0;      ///< condition number of the reduced Gram (inf if singular)
  double residual = 0.0; ///< c_hat' W c_hat
  bool unique = false;   ///< reduced Gram numerically nonsingular
  std::vector<int> negatives_clipped;  ///< 0-based entries zeroed by the clip option
  std::vector<std::string> flight_ids;
};

struct SolveOptions {
  bool clip_small_negatives = false;
  /// Relative singular-value cutoff deciding uniqueness and the pseudoinverse.
  double uniqueness_tol = 1e-12;
};

/// Integrates the costate basis backward over the data grid with fixed-step
/// RK4; the state forcing term is linearly interpolated between samples.
/// Trajectory and desired must share one grid.
CostateBasisSeries integrate_costate_basis(const SampledTrajectory& traj,
                                           const SampledTrajectory& desired);

/// Trapezoidal quadrature of W1'W1 over one flight.
GramMatrix assemble_gram_single(const SampledTrajectory& traj,
                                const SampledTrajectory& desired,
                                const CostateBasisSeries& basis);
GramMatrix assemble_gram_single(const SampledTrajectory& traj,
                                const SampledTrajectory& desired);

struct FlightData {
  SampledTrajectory traj;
  SampledTrajectory desired;
};

/// Sums per-flight Gram matrices; flights may live on different grids.
/// Stacking flights never loses information: the summed W dominates each term.
GramMatrix assemble_gram_multi(const std::vector<FlightData>& flights);

/// Basis of the feasible directions once one weight entry is pinned: the
/// dim x (dim-1) identity with the pinned column removed (orthonormal columns).
Eigen::MatrixXd build_selection(int known_index, int dim = WeightVector::kDim);

/// Minimizes c' W c over weight vectors with c[known_index] = known_value by
/// reducing onto the unknown entries and solving the normal equations through
/// a symmetric eigendecomposition. When the reduced Gram is numerically
/// singular (relative cutoff in SolveOptions) the minimum-norm least-squares
/// solution is returned with unique = false. Rejects asymmetric or indefinite
/// W and a zero known_value.
IocSolution solve_weights(const GramMatrix& gram, int known_index, double known_value,
                          const SolveOptions& options = {});

/// Conditioning report of the reduced Gram: full spectrum, condition number,
/// numerical rank, and the weight-space directions the data cannot see.
struct GramDiagnostics {
  Eigen::VectorXd singular_values;  ///< descending
  double r_w = 0.0;
  int rank = 0;
  Eigen::MatrixXd null_space;  ///< 9 x k, zero at the pinned entry
};
GramDiagnostics diagnose(const GramMatrix& gram, int known_index);

}  // namespace flockioc
