#include "otap/init.hpp"

#include <algorithm>
#include <numeric>

#include "otap/linalg.hpp"
#include "otap/rng.hpp"

namespace otap {

double xi(const std::vector<Index>& shape) {
  const Index m = static_cast<Index>(shape.size());
  if (m < 1) throw Error(Errc::InvalidOrder, "xi needs order >= 1");
  auto n = [&](Index j) { return static_cast<double>(shape[static_cast<std::size_t>(j - 1)]); };
  double prod = 1.0;
  if (m % 2 == 0) {
    for (Index j = 1; j <= m - 1; ++j) prod *= n(j);
    for (Index j = 1; j <= m / 2 - 2; ++j) prod *= n(2 * j + 1);
    prod /= n(2);
  } else {
    for (Index j = 2; j <= m - 1; ++j) prod *= n(j);
    for (Index j = 1; j <= (m + 1) / 2 - 2; ++j) prod *= n(2 * j);
  }
  return std::sqrt(prod);
}

namespace {

std::vector<Vector> basis_vectors(const std::vector<Index>& shape) {
  std::vector<Vector> out;
  out.reserve(shape.size());
  for (Index n : shape) out.push_back(Vector::Unit(n, 0));
  return out;
}

// Recursion on a tensor whose modes are already sorted ascending. A zero
// tensor anywhere in the recursion yields canonical basis vectors (any unit
// vector is as good as any other there).
std::vector<Vector> rank1_recurse(const DenseTensor& b) {
  const Index m = b.order();
  if (m == 1) {
    double nrm = b.flat().norm();
    if (nrm == 0.0) return basis_vectors(b.shape());
    return {b.flat() / nrm};
  }
  if (m == 2) {
    Eigen::Map<const Matrix> mat(b.data(), b.extent(0), b.extent(1));
    if (mat.isZero(0.0)) return basis_vectors(b.shape());
    SingularPair p = leading_singular_pair(mat);
    return {p.u, p.v};
  }

  Index lead = 1;
  for (Index j = 0; j < m - 2; ++j) lead *= b.extent(j);
  const Index n1 = b.extent(m - 2), n2 = b.extent(m - 1);
  Eigen::Map<const Matrix> flat(b.data(), lead, n1 * n2);
  if (flat.isZero(0.0)) return basis_vectors(b.shape());

  SingularPair p = leading_singular_pair(flat);
  // The right vector, reshaped, covers the trailing two modes.
  std::vector<Vector> tail_vecs =
      rank1_recurse(DenseTensor::from_data({n1, n2}, {p.v.data(), p.v.data() + p.v.size()}));

  // Contract the trailing modes out and recurse on the rest.
  DenseTensor rest = contract_mode(b, m - 1, tail_vecs[1]);
  rest = contract_mode(rest, m - 2, tail_vecs[0]);
  std::vector<Vector> head_vecs = rank1_recurse(rest);

  head_vecs.push_back(tail_vecs[0]);
  head_vecs.push_back(tail_vecs[1]);
  return head_vecs;
}

}  // namespace

Rank1Result rank1_approx(const DenseTensor& b) {
  if (b.flat().norm() == 0.0) throw Error(Errc::ZeroTensor, "rank-1 approximation of a zero tensor");
  const Index m = b.order();

  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](Index a, Index c) { return b.extent(a) < b.extent(c); });

  bool sorted = std::is_sorted(perm.begin(), perm.end());
  std::vector<Vector> sorted_vecs =
      sorted ? rank1_recurse(b) : rank1_recurse(permute_modes(b, perm));

  Rank1Result out;
  out.vectors.resize(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k)
    out.vectors[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] =
        std::move(sorted_vecs[static_cast<std::size_t>(k)]);
  out.value = full_contract(b, out.vectors);
  return out;
}

namespace {

void require_rank_fits(const DenseTensor& a, int r, int t) {
  const Index d = a.order();
  if (t < 1 || t > d) throw Error(Errc::InvalidMode, "t must be between 1 and the order");
  if (r < 1) throw Error(Errc::RankTooLarge, "rank must be positive");
  for (Index j = d - t; j < d; ++j)
    if (a.extent(j) < r) throw Error(Errc::RankTooLarge, "rank exceeds mode extent");
}

void finalize_weights(const DenseTensor& a, FactorSet& f) {
  f.sigma.resize(f.R);
  for (int i = 0; i < f.R; ++i) f.sigma(i) = full_contract(a, f.columns(i));
  double ns = f.sigma.norm();
  if (ns == 0.0) throw Error(Errc::DegenerateInitializer, "initializer has zero weight vector");
  f.omega = f.sigma / ns;
}

}  // namespace

FactorSet get_initializer(const DenseTensor& a, int r, int t) {
  require_rank_fits(a, r, t);
  const Index d = a.order();
  const Index free = d - t;

  FactorSet f;
  f.R = r;
  f.t = t;
  f.U.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < free; ++j)
    f.U[static_cast<std::size_t>(j)].resize(a.extent(j), r);
  for (Index j = free; j < d; ++j)
    f.U[static_cast<std::size_t>(j)] = leading_left_singular_vectors(unfold(a, j), r);

  for (int i = 0; i < r && free > 0; ++i) {
    DenseTensor slice = contract_mode(a, d - 1, f.U[static_cast<std::size_t>(d - 1)].col(i));
    for (Index j = d - 2; j >= free; --j)
      slice = contract_mode(slice, j, f.U[static_cast<std::size_t>(j)].col(i));

    if (slice.flat().norm() == 0.0) {
      for (Index j = 0; j < free; ++j)
        f.U[static_cast<std::size_t>(j)].col(i) = Vector::Unit(a.extent(j), 0);
      continue;
    }
    Rank1Result r1 = rank1_approx(slice);
    for (Index j = 0; j < free; ++j)
      f.U[static_cast<std::size_t>(j)].col(i) = r1.vectors[static_cast<std::size_t>(j)];
  }

  finalize_weights(a, f);
  return f;
}

FactorSet random_init(const DenseTensor& a, int r, int t, std::uint64_t seed) {
  require_rank_fits(a, r, t);
  const Index d = a.order();
  const Index free = d - t;
  Rng rng(seed);

  FactorSet f;
  f.R = r;
  f.t = t;
  f.U.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Matrix& u = f.U[static_cast<std::size_t>(j)];
    u.resize(a.extent(j), r);
    for (Index k = 0; k < u.size(); ++k) u.data()[k] = rng.uniform_pm1();
    if (j < free) {
      for (int i = 0; i < r; ++i) {
        double nrm = u.col(i).norm();
        if (nrm == 0.0)
          u.col(i) = Vector::Unit(a.extent(j), 0);
        else
          u.col(i) /= nrm;
      }
    } else {
      u = polar_decompose(u).U;
    }
  }
  finalize_weights(a, f);
  return f;
}

}  // namespace otap
