#include "flockioc/types.hpp"

#include <cmath>
#include <stdexcept>

namespace flockioc {

void SampledTrajectory::validate(const std::string& what) const {
  if (!(dt > 0.0)) {
    throw std::invalid_argument(what + ": sample period must be positive");
  }
  if (states.cols() != controls.cols()) {
    throw std::invalid_argument(what + ": states and controls must have equal length");
  }
  if (states.cols() < 2) {
    throw std::invalid_argument(what + ": need at least two samples");
  }
  if (!std::isfinite(t0) || !states.allFinite() || !controls.allFinite()) {
    throw std::invalid_argument(what + ": non-finite values");
  }
}

bool same_grid(const SampledTrajectory& a, const SampledTrajectory& b, double tol) {
  return a.size() == b.size() && std::abs(a.t0 - b.t0) <= tol && std::abs(a.dt - b.dt) <= tol;
}

void require_same_grid(const SampledTrajectory& a, const SampledTrajectory& b,
                       const std::string& what) {
  if (!same_grid(a, b)) {
    throw std::invalid_argument(what + ": trajectories must share one sample grid");
  }
}

WeightVector WeightVector::pinned(const Vec9& values, int known_index) {
  if (known_index < 0 || known_index >= kDim) {
    throw std::invalid_argument("weight index out of range");
  }
  WeightVector w;
  w.c = values;
  w.known_index = known_index;
  w.known_value = values[known_index];
  return w;
}

bool WeightVector::forward_valid() const {
  return c.allFinite() && (c.head<6>().array() >= 0.0).all() &&
         (c.tail<3>().array() > 0.0).all() && pin_consistent();
}

void WeightVector::validate_forward(const std::string& what) const {
  if (known_index < 0 || known_index >= kDim) {
    throw std::invalid_argument(what + ": pinned index out of range");
  }
  if (!c.allFinite()) {
    throw std::invalid_argument(what + ": non-finite weights");
  }
  if (!(c.head<6>().array() >= 0.0).all()) {
    throw std::invalid_argument(what + ": tracking weights must be nonnegative");
  }
  if (!(c.tail<3>().array() > 0.0).all()) {
    throw std::invalid_argument(what + ": control weights must be positive");
  }
  if (!pin_consistent()) {
    throw std::invalid_argument(what + ": pinned entry disagrees with its known value");
  }
}

}  // namespace flockioc
