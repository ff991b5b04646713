#include "otap/linalg.hpp"

#include <Eigen/SVD>

namespace otap {

namespace {

void canonicalize_column_signs(Matrix& p, Matrix& q) {
  for (Index c = 0; c < p.cols(); ++c) {
    for (Index r = 0; r < p.rows(); ++r) {
      if (p(r, c) != 0.0) {
        if (p(r, c) < 0.0) {
          p.col(c) = -p.col(c);
          q.col(c) = -q.col(c);
        }
        break;
      }
    }
  }
}

}  // namespace

SvdThin thin_svd(const Matrix& c) {
  if (c.rows() < c.cols())
    throw Error(Errc::ShapeMismatch, "thin_svd requires rows >= cols; transpose the input");
  if (!c.allFinite()) throw Error(Errc::NonFiniteEntry, "thin_svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw Error(Errc::ConvergenceFailure, "SVD did not converge");
  SvdThin out;
  out.P = svd.matrixU();
  out.lambda = svd.singularValues();
  out.Q = svd.matrixV();
  canonicalize_column_signs(out.P, out.Q);
  return out;
}

PolarFactors polar_decompose(const Matrix& c) {
  SvdThin svd = thin_svd(c);
  PolarFactors out;
  out.U = svd.P * svd.Q.transpose();
  out.H = svd.Q * svd.lambda.asDiagonal() * svd.Q.transpose();
  out.H = 0.5 * (out.H + out.H.transpose()).eval();
  return out;
}

SingularPair leading_singular_pair(const Matrix& c) {
  if (c.isZero(0.0)) throw Error(Errc::ZeroMatrix, "leading singular pair of a zero matrix");
  SingularPair out;
  if (c.rows() >= c.cols()) {
    SvdThin svd = thin_svd(c);
    out.u = svd.P.col(0);
    out.s = svd.lambda(0);
    out.v = svd.Q.col(0);
  } else {
    SvdThin svd = thin_svd(c.transpose());
    out.u = svd.Q.col(0);
    out.s = svd.lambda(0);
    out.v = svd.P.col(0);
  }
  for (Index r = 0; r < out.u.size(); ++r) {
    if (out.u(r) != 0.0) {
      if (out.u(r) < 0.0) {
        out.u = -out.u;
        out.v = -out.v;
      }
      break;
    }
  }
  return out;
}

Matrix leading_left_singular_vectors(const Matrix& c, Index r) {
  if (r < 1 || r > c.rows() || r > c.cols())
    throw Error(Errc::RankTooLarge, "requested more singular vectors than the matrix carries");
  if (c.rows() <= c.cols()) return thin_svd(c.transpose()).Q.leftCols(r);
  return thin_svd(c).P.leftCols(r);
}

}  // namespace otap
