#pragma once

#include <cstdint>

#include "otap/model.hpp"

namespace otap {

/// Order-dependent constant from the rank-1 approximation quality bound.
/// The premise has the extents sorted ascending; callers sort first.
/// Even m:  sqrt( prod_{j=1}^{m-1} n_j * prod_{j=1}^{m/2-2} n_{2j+1} / n_2 )
/// Odd m:   sqrt( prod_{j=2}^{m-1} n_j * prod_{j=1}^{(m+1)/2-2} n_{2j} )
/// (1-based indices, empty products are 1).
double xi(const std::vector<Index>& shape);

struct Rank1Result {
  std::vector<Vector> vectors;  // one unit vector per mode
  double value = 0.0;           // <B, x_1 x ... x x_m>
};

/// Greedy rank-1 approximation: split the trailing two modes off via a
/// leading singular pair of the flattened tensor, recurse on both parts.
/// Modes are sorted ascending internally and unsorted on return.
Rank1Result rank1_approx(const DenseTensor& b);

/// Truncated-HOSVD initializer: leading left singular vectors of the
/// unfoldings for the t orthonormal modes, then per-column rank-1
/// approximations of the contracted tensor for the free modes.
FactorSet get_initializer(const DenseTensor& a, int r, int t);

/// Seeded baseline initializer: uniform [-1,1] entries, free-mode columns
/// normalized, orthonormal modes projected via polar decomposition.
FactorSet random_init(const DenseTensor& a, int r, int t, std::uint64_t seed);

}  // namespace otap
