#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "otap/errors.hpp"

namespace otap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense real tensor of order d >= 1 with mode-1-fastest storage (the first
/// index varies fastest in the flat array, i.e. generalized column-major).
/// Immutable after construction; all operations below are pure functions.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Validates shape/value consistency and rejects NaN/Inf entries.
  static DenseTensor from_data(std::vector<Index> shape, std::vector<double> values);

  static DenseTensor zeros(std::vector<Index> shape);

  Index order() const { return static_cast<Index>(shape_.size()); }
  const std::vector<Index>& shape() const { return shape_; }
  Index extent(Index mode) const { return shape_[static_cast<std::size_t>(mode)]; }
  Index size() const { return static_cast<Index>(values_.size()); }

  const std::vector<double>& values() const { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  Eigen::Map<const Vector> flat() const {
    return Eigen::Map<const Vector>(values_.data(), size());
  }

 private:
  std::vector<Index> shape_;
  std::vector<double> values_;
};

double frobenius_norm(const DenseTensor& t);

/// Sum of elementwise products; shapes must match exactly.
double inner(const DenseTensor& a, const DenseTensor& b);

/// Mode-j unfolding (0-based j): rows indexed by i_j, column of the entry
/// (i_1,...,i_d) is sum_{l != j} i_l * J_l with J_l = prod_{m<l, m != j} n_m.
Matrix unfold(const DenseTensor& t, Index mode);

/// Inverse of unfold: rebuilds the tensor from its mode-j unfolding.
DenseTensor refold(const Matrix& m, Index mode, std::vector<Index> shape);

/// Contract one mode with a vector, reducing the order by one (order >= 2).
DenseTensor contract_mode(const DenseTensor& t, Index mode, const Vector& v);

/// <t, v_1 x ... x v_d>; one vector per mode.
double full_contract(const DenseTensor& t, const std::vector<Vector>& vectors);

/// Contract every mode except `skip`; vectors[skip] is ignored. Returns the
/// gradient of <t, x_1 x ... x x_d> with respect to the skipped mode's vector.
Vector rank1_contract(const DenseTensor& t, const std::vector<Vector>& vectors, Index skip);

/// Columnwise Kronecker product: column c is kron(a.col(c), b.col(c)) with
/// b's index varying fastest.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// sum_i sigma_i * u_{1,i} x ... x u_{d,i}; factors[j] is n_j x R.
DenseTensor cp_reconstruct(const Vector& sigma, const std::vector<Matrix>& factors);

/// Same flat values under a new shape (element count must be preserved).
DenseTensor reshape(const DenseTensor& t, std::vector<Index> new_shape);

/// Rearrange modes: result extent m equals input extent perm[m].
DenseTensor permute_modes(const DenseTensor& t, const std::vector<Index>& perm);

// Text format: line 1 "order d", line 2 "dims n1 ... nd", then the values in
// storage order, whitespace-separated. Written with 17 significant digits so
// round-trips are exact.
void write_tensor(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor(std::istream& is);
void write_tensor_file(const std::string& path, const DenseTensor& t);
DenseTensor read_tensor_file(const std::string& path);

}  // namespace otap
