#pragma once

#include <cstdint>

#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/sdc_model.hpp"

namespace sdcsmf {

// Empirical upper bound on a matrix-Taylor remainder norm over an ellipsoid
// boundary, obtained by non-adaptive random search.
struct RemainderBound {
  double value = 0.0;
  SdcMatrix which = SdcMatrix::A;
  int sample_count = 0;
  VectorXd argmax_z;  // unit vector achieving the empirical maximum
};

// Samples N unit vectors z_i, evaluates ||R(xhat, xhat + E z_i)||_2 and
// returns the maximum. Ties break to the lowest sample index and the sample
// stream is fixed by the seed, so the result is reproducible.
inline RemainderBound bound_remainder(SdcMatrix which, const SdcParameterization& param,
                                      const VectorXd& xhat, const CholFactor& E,
                                      int N, std::uint64_t seed) {
  if (N < 1) throw DimensionMismatch("bound_remainder: N must be >= 1");
  if (E.dim() != param.n() || xhat.size() != param.n())
    throw DimensionMismatch("bound_remainder: dimension mismatch");
  const auto samples = sample_unit_sphere(param.n(), N, seed);
  RemainderBound bound;
  bound.which = which;
  bound.sample_count = N;
  bound.value = -1.0;
  for (const auto& z : samples) {
    const double norm = spectral_norm(remainder(which, param, xhat, xhat + E.matrix * z));
    if (norm > bound.value) {
      bound.value = norm;
      bound.argmax_z = z;
    }
  }
  return bound;
}

}  // namespace sdcsmf
