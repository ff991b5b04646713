#pragma once

// Reference implementations for tests: naive index arithmetic and textbook
// algorithms, deliberately sharing no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "otap/model.hpp"
#include "otap/rng.hpp"

namespace oracle {

using otap::DenseTensor;
using otap::FactorSet;
using otap::Index;
using otap::Matrix;
using otap::Vector;

inline bool next_index(std::vector<Index>& idx, const std::vector<Index>& shape) {
  for (std::size_t m = 0; m < shape.size(); ++m) {
    if (++idx[m] < shape[m]) return true;
    idx[m] = 0;
  }
  return false;
}

inline Index flat_of(const std::vector<Index>& idx, const std::vector<Index>& shape) {
  Index flat = 0, stride = 1;
  for (std::size_t m = 0; m < shape.size(); ++m) {
    flat += idx[m] * stride;
    stride *= shape[m];
  }
  return flat;
}

inline double naive_inner(const DenseTensor& a, const DenseTensor& b) {
  double sum = 0.0;
  for (Index k = 0; k < a.size(); ++k) sum += a.data()[k] * b.data()[k];
  return sum;
}

inline Matrix naive_unfold(const DenseTensor& t, Index mode) {
  const auto& shape = t.shape();
  Index cols = t.size() / t.extent(mode);
  Matrix m = Matrix::Zero(t.extent(mode), cols);
  std::vector<Index> idx(shape.size(), 0);
  do {
    Index col = 0, stride = 1;
    for (std::size_t l = 0; l < shape.size(); ++l) {
      if (static_cast<Index>(l) == mode) continue;
      col += idx[l] * stride;
      stride *= shape[l];
    }
    m(idx[static_cast<std::size_t>(mode)], col) = t.data()[flat_of(idx, shape)];
  } while (next_index(idx, shape));
  return m;
}

inline double naive_full_contract(const DenseTensor& t, const std::vector<Vector>& vecs) {
  const auto& shape = t.shape();
  std::vector<Index> idx(shape.size(), 0);
  double sum = 0.0;
  do {
    double prod = t.data()[flat_of(idx, shape)];
    for (std::size_t m = 0; m < shape.size(); ++m) prod *= vecs[m](idx[m]);
    sum += prod;
  } while (next_index(idx, shape));
  return sum;
}

inline Vector naive_rank1_contract(const DenseTensor& t, const std::vector<Vector>& vecs,
                                   Index skip) {
  const auto& shape = t.shape();
  Vector out = Vector::Zero(t.extent(skip));
  std::vector<Index> idx(shape.size(), 0);
  do {
    double prod = t.data()[flat_of(idx, shape)];
    for (std::size_t m = 0; m < shape.size(); ++m)
      if (static_cast<Index>(m) != skip) prod *= vecs[m](idx[m]);
    out(idx[static_cast<std::size_t>(skip)]) += prod;
  } while (next_index(idx, shape));
  return out;
}

inline Vector naive_kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i)
    for (Index k = 0; k < b.size(); ++k) out(i * b.size() + k) = a(i) * b(k);
  return out;
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
inline Vector jacobi_sym_eigenvalues(Matrix s) {
  const Index n = s.rows();
  const double scale = std::max(s.norm(), 1e-300);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p + 1 < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (s(p, q) == 0.0) continue;
        double tau = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        double t = tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t), sn = t * c;
        for (Index k = 0; k < n; ++k) {
          double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (Index k = 0; k < n; ++k) {
          double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
      }
    }
  }
  Vector ev = s.diagonal();
  std::sort(ev.data(), ev.data() + n, std::greater<double>());
  return ev;
}

/// Singular values of any matrix through the Gram matrix of the smaller side.
inline Vector gram_singular_values(const Matrix& c) {
  Matrix gram = c.rows() <= c.cols() ? Matrix(c * c.transpose()) : Matrix(c.transpose() * c);
  Vector ev = jacobi_sym_eigenvalues(gram);
  for (Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(ev(i), 0.0));
  return ev;
}

/// rel_err by exhaustive permutation search (feasible for R <= 8), with the
/// same per-(mode,column) sign minimization.
inline double brute_force_rel_err(const FactorSet& truth, const FactorSet& rec) {
  const int r = truth.R;
  std::vector<int> perm(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      for (Index j = 0; j < truth.order(); ++j) {
        const Vector& a = truth.U[static_cast<std::size_t>(j)].col(i);
        const Vector& b = rec.U[static_cast<std::size_t>(j)].col(perm[static_cast<std::size_t>(i)]);
        total += std::min((a - b).squaredNorm(), (a + b).squaredNorm());
      }
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  double denom_sq = 0.0;
  for (const Matrix& u : truth.U) denom_sq += u.squaredNorm();
  return std::sqrt(best) / std::sqrt(denom_sq);
}

/// Numerical rank by modified Gram-Schmidt with a relative threshold.
inline int mgs_rank(Matrix m, double rel_tol = 1e-10) {
  double scale = 0.0;
  for (Index c = 0; c < m.cols(); ++c) scale = std::max(scale, m.col(c).norm());
  if (scale == 0.0) return 0;
  std::vector<Vector> basis;
  for (Index c = 0; c < m.cols(); ++c) {
    Vector v = m.col(c);
    for (const Vector& b : basis) v -= b.dot(v) * b;
    for (const Vector& b : basis) v -= b.dot(v) * b;  // second pass for stability
    if (v.norm() > rel_tol * scale) basis.push_back(v.normalized());
  }
  return static_cast<int>(basis.size());
}

inline int kruskal_rank_by_enumeration(const Matrix& m) {
  const int cols = static_cast<int>(m.cols());
  const int kmax = static_cast<int>(std::min(m.rows(), m.cols()));
  for (int k = kmax; k >= 1; --k) {
    bool all_ok = true;
    std::vector<int> subset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
    while (all_ok) {
      Matrix sub(m.rows(), k);
      for (int i = 0; i < k; ++i) sub.col(i) = m.col(subset[static_cast<std::size_t>(i)]);
      if (mgs_rank(sub) < k) all_ok = false;
      int i = k - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] == cols - k + i) --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (int l = i + 1; l < k; ++l)
        subset[static_cast<std::size_t>(l)] = subset[static_cast<std::size_t>(l - 1)] + 1;
    }
    if (all_ok) return k;
  }
  return 0;
}

inline DenseTensor random_tensor(const std::vector<Index>& shape, otap::Rng& rng,
                                 bool normal = false) {
  DenseTensor t = DenseTensor::zeros(shape);
  for (Index k = 0; k < t.size(); ++k)
    t.data()[k] = normal ? rng.normal() : rng.uniform_pm1();
  return t;
}

inline Vector random_unit(Index n, otap::Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  double nrm = v.norm();
  return nrm > 0 ? Vector(v / nrm) : Vector(Vector::Unit(n, 0));
}

/// Random feasible factor set built with QR-style orthonormalization (an
/// independent construction from the library's polar projection).
inline FactorSet random_feasible(const std::vector<Index>& dims, int r, int t, otap::Rng& rng) {
  FactorSet f;
  f.R = r;
  f.t = t;
  const Index d = static_cast<Index>(dims.size());
  f.U.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Matrix raw(dims[static_cast<std::size_t>(j)], r);
    for (Index k = 0; k < raw.size(); ++k) raw.data()[k] = rng.normal();
    Matrix& u = f.U[static_cast<std::size_t>(j)];
    if (j < d - t) {
      u = raw;
      for (int i = 0; i < r; ++i) u.col(i).normalize();
    } else {
      // Gram-Schmidt orthonormalization
      u = raw;
      for (int i = 0; i < r; ++i) {
        for (int l = 0; l < i; ++l) u.col(i) -= u.col(l).dot(u.col(i)) * u.col(l);
        for (int l = 0; l < i; ++l) u.col(i) -= u.col(l).dot(u.col(i)) * u.col(l);
        u.col(i).normalize();
      }
    }
  }
  f.sigma = Vector::Zero(r);
  f.omega = Vector::Zero(r);
  return f;
}

}  // namespace oracle
