#pragma once

#include "otap/tensor.hpp"

namespace otap {

/// Thin SVD C = P diag(lambda) Q^T with P m-by-n (P^T P = I), lambda
/// nonincreasing and nonnegative, Q n-by-n orthogonal. Column signs are
/// canonicalized (first nonzero entry of each P column is positive) so equal
/// inputs produce equal outputs bit for bit.
struct SvdThin {
  Matrix P;
  Vector lambda;
  Matrix Q;
};

/// C = U H with U columnwise orthonormal and H symmetric positive
/// semidefinite (U = P Q^T, H = Q diag(lambda) Q^T).
struct PolarFactors {
  Matrix U;
  Matrix H;
};

struct SingularPair {
  Vector u;
  double s = 0.0;
  Vector v;
};

/// Requires rows >= cols; callers transpose wide matrices.
SvdThin thin_svd(const Matrix& c);

/// Requires rows >= cols. When C has full column rank U is the unique
/// orthonormal polar factor; otherwise the deterministic P Q^T representative
/// is returned.
PolarFactors polar_decompose(const Matrix& c);

/// Leading singular triple of a nonzero matrix of any shape; the first
/// nonzero entry of u is positive.
SingularPair leading_singular_pair(const Matrix& c);

/// First r left singular vectors (columns, ordered by decreasing singular
/// value) of a matrix of any shape.
Matrix leading_left_singular_vectors(const Matrix& c, Index r);

}  // namespace otap
