#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "otap/tensor.hpp"

using namespace otap;

TEST_CASE("from_data validates shape and contents") {
  DenseTensor t = DenseTensor::from_data({2, 2}, {1, 0, 0, 1});
  CHECK(t.order() == 2);
  CHECK(t.values() == std::vector<double>{1, 0, 0, 1});

  DenseTensor cube = DenseTensor::from_data({2, 3, 4}, std::vector<double>(24, 0.5));
  CHECK(cube.size() == 24);

  CHECK_THROWS_AS(DenseTensor::from_data({2, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(DenseTensor::from_data({}, {}), Error);
  CHECK_THROWS_AS(DenseTensor::from_data({2}, {1.0, std::nan("")}), Error);
  try {
    DenseTensor::from_data({2, 2}, {1, 2, 3});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShapeMismatch);
  }

  // caller mutation has no effect
  std::vector<double> vals{1, 2, 3, 4};
  DenseTensor u = DenseTensor::from_data({4}, vals);
  vals[0] = 99;
  CHECK(u.values()[0] == 1.0);
}

TEST_CASE("frobenius norm and inner product") {
  CHECK(frobenius_norm(DenseTensor::zeros({3, 2})) == 0.0);
  CHECK(frobenius_norm(DenseTensor::from_data({2, 2}, {3, 0, 0, 4})) == 5.0);

  Rng rng(7);
  DenseTensor t = oracle::random_tensor({3, 3, 3}, rng);
  CHECK(frobenius_norm(t) == doctest::Approx(std::sqrt(oracle::naive_inner(t, t))).epsilon(1e-12));
  CHECK(inner(t, t) == doctest::Approx(frobenius_norm(t) * frobenius_norm(t)).epsilon(1e-12));

  DenseTensor z = DenseTensor::zeros({3, 3, 3});
  CHECK(inner(t, z) == 0.0);
  CHECK_THROWS_AS(inner(t, DenseTensor::zeros({3, 3})), Error);

  // e1 x e2 against itself over shape (2,2)
  DenseTensor e12 = DenseTensor::from_data({2, 2}, {0, 0, 1, 0});
  CHECK(inner(e12, e12) == 1.0);
}

TEST_CASE("unfold matches the index map and round-trips") {
  Rng rng(11);
  DenseTensor mat = oracle::random_tensor({4, 5}, rng);
  Matrix m1 = unfold(mat, 0);
  CHECK((m1 - Eigen::Map<const Matrix>(mat.data(), 4, 5)).norm() == 0.0);
  Matrix m2 = unfold(mat, 1);
  CHECK((m2 - Eigen::Map<const Matrix>(mat.data(), 4, 5).transpose()).norm() == 0.0);

  DenseTensor t = oracle::random_tensor({2, 3, 4}, rng);
  CHECK(unfold(t, 0).rows() == 2);
  CHECK(unfold(t, 0).cols() == 12);
  for (Index j = 0; j < 3; ++j) {
    CHECK((unfold(t, j) - oracle::naive_unfold(t, j)).norm() == 0.0);
    DenseTensor back = refold(unfold(t, j), j, t.shape());
    CHECK(back.values() == t.values());  // bit-exact round trip
  }
  CHECK_THROWS_AS(unfold(t, 3), Error);
}

TEST_CASE("rank1_contract") {
  Rng rng(13);
  std::vector<Vector> xs{oracle::random_unit(3, rng), oracle::random_unit(4, rng),
                         oracle::random_unit(2, rng)};
  DenseTensor t = cp_reconstruct(Vector::Ones(1), {xs[0], xs[1], xs[2]});
  Vector mid = rank1_contract(t, xs, 1);
  CHECK((mid - xs[1]).norm() < 1e-12);

  DenseTensor z = DenseTensor::zeros({3, 4, 2});
  CHECK(rank1_contract(z, xs, 0).norm() == 0.0);

  DenseTensor r = oracle::random_tensor({3, 4, 5}, rng);
  std::vector<Vector> vs{oracle::random_unit(3, rng), oracle::random_unit(4, rng),
                         oracle::random_unit(5, rng)};
  for (Index skip = 0; skip < 3; ++skip) {
    Vector got = rank1_contract(r, vs, skip);
    CHECK((got - oracle::naive_rank1_contract(r, vs, skip)).norm() < 1e-12);
    // unfolding route: A_(j) times the Kronecker vector of the others,
    // highest mode first
    Vector kron;
    bool started = false;
    for (Index j = 2; j >= 0; --j) {
      if (j == skip) continue;
      kron = started ? Vector(oracle::naive_kron(kron, vs[static_cast<std::size_t>(j)]))
                     : vs[static_cast<std::size_t>(j)];
      started = true;
    }
    CHECK((got - oracle::naive_unfold(r, skip) * kron).norm() < 1e-12);
  }
}

TEST_CASE("full_contract") {
  Rng rng(17);
  Vector x1 = oracle::random_unit(3, rng), x2 = oracle::random_unit(4, rng);
  DenseTensor t = cp_reconstruct(Vector::Constant(1, 2.0), {Matrix(x1), Matrix(x2)});
  CHECK(full_contract(t, {x1, x2}) == doctest::Approx(2.0).epsilon(1e-12));

  Vector orth = oracle::random_unit(3, rng);
  orth -= x1.dot(orth) * x1;
  orth.normalize();
  CHECK(full_contract(t, {orth, x2}) == doctest::Approx(0.0).epsilon(1e-12));

  DenseTensor r = oracle::random_tensor({3, 4, 5}, rng);
  std::vector<Vector> vs{oracle::random_unit(3, rng), oracle::random_unit(4, rng),
                         oracle::random_unit(5, rng)};
  double full = full_contract(r, vs);
  CHECK(full == doctest::Approx(oracle::naive_full_contract(r, vs)).epsilon(1e-12));
  for (Index j = 0; j < 3; ++j)
    CHECK(full ==
          doctest::Approx(rank1_contract(r, vs, j).dot(vs[static_cast<std::size_t>(j)]))
              .epsilon(1e-12));
}

TEST_CASE("full_contract is multilinear") {
  Rng rng(19);
  DenseTensor r = oracle::random_tensor({4, 3, 5}, rng);
  for (Index mode = 0; mode < 3; ++mode) {
    std::vector<Vector> vs{oracle::random_unit(4, rng), oracle::random_unit(3, rng),
                           oracle::random_unit(5, rng)};
    Vector a = oracle::random_unit(r.extent(mode), rng);
    Vector b = oracle::random_unit(r.extent(mode), rng);
    double ca = rng.uniform_pm1(), cb = rng.uniform_pm1();
    auto with = [&](const Vector& v) {
      std::vector<Vector> w = vs;
      w[static_cast<std::size_t>(mode)] = v;
      return full_contract(r, w);
    };
    double lhs = with(ca * a + cb * b);
    double rhs = ca * with(a) + cb * with(b);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("khatri_rao") {
  Matrix a(1, 3), b(1, 3);
  a << 1, 2, 3;
  b << 4, 5, 6;
  Matrix kr = khatri_rao(a, b);
  CHECK(kr.rows() == 1);
  CHECK(kr(0, 0) == 4.0);
  CHECK(kr(0, 1) == 10.0);
  CHECK(kr(0, 2) == 18.0);

  Matrix id = Matrix::Identity(2, 2);
  Matrix kr2 = khatri_rao(id, id);
  CHECK(kr2.rows() == 4);
  CHECK((kr2.col(0) - Vector::Unit(4, 0)).norm() == 0.0);
  CHECK((kr2.col(1) - Vector::Unit(4, 3)).norm() == 0.0);

  CHECK_THROWS_AS(khatri_rao(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), Error);
}

TEST_CASE("cp_reconstruct and the unfolding identity") {
  // single basis entry
  Matrix u1 = Vector::Unit(3, 1), u2 = Vector::Unit(2, 0), u3 = Vector::Unit(4, 2);
  DenseTensor t = cp_reconstruct(Vector::Ones(1), {u1, u2, u3});
  CHECK(frobenius_norm(t) == 1.0);
  std::vector<Index> idx{1, 0, 2};
  CHECK(t.data()[oracle::flat_of(idx, t.shape())] == 1.0);

  CHECK(frobenius_norm(cp_reconstruct(Vector::Zero(2), {Matrix::Ones(3, 2), Matrix::Ones(4, 2)})) ==
        0.0);

  // orthonormal factors on every mode: ||T||^2 = sum sigma_i^2
  Rng rng(23);
  FactorSet f = oracle::random_feasible({5, 4, 6}, 3, 3, rng);
  Vector sigma(3);
  sigma << 1.5, -0.25, 0.75;
  DenseTensor g = cp_reconstruct(sigma, f.U);
  CHECK(frobenius_norm(g) * frobenius_norm(g) ==
        doctest::Approx(sigma.squaredNorm()).epsilon(1e-10));

  // unfold(T, j) == U_j diag(sigma) (U_d ** ... ** U_1 without j)^T
  for (auto dims : std::vector<std::vector<Index>>{{3, 4, 5}, {2, 3, 4, 3}}) {
    const Index d = static_cast<Index>(dims.size());
    std::vector<Matrix> factors;
    for (Index n : dims) {
      Matrix u(n, 3);
      for (Index k = 0; k < u.size(); ++k) u.data()[k] = rng.uniform_pm1();
      factors.push_back(u);
    }
    Vector s(3);
    s << 0.3, -1.2, 2.0;
    DenseTensor full = cp_reconstruct(s, factors);
    for (Index j = 0; j < d; ++j) {
      Matrix chain;
      bool started = false;
      for (Index l = d - 1; l >= 0; --l) {
        if (l == j) continue;
        chain = started ? Matrix(khatri_rao(chain, factors[static_cast<std::size_t>(l)]))
                        : factors[static_cast<std::size_t>(l)];
        started = true;
      }
      Matrix expect = factors[static_cast<std::size_t>(j)] * s.asDiagonal() * chain.transpose();
      CHECK((unfold(full, j) - expect).norm() <= 1e-10 * expect.norm());
    }
  }
}

TEST_CASE("reshape keeps the flat values") {
  Rng rng(29);
  DenseTensor t = oracle::random_tensor({2, 3, 4}, rng);
  DenseTensor r = reshape(t, {6, 4});
  CHECK(r.values() == t.values());
  DenseTensor back = reshape(r, {2, 3, 4});
  CHECK(back.values() == t.values());
  CHECK_THROWS_AS(reshape(t, {5, 5}), Error);

  // rank-1 (2,2,2) reshaped to (2,4) equals x (z kron y)^T
  Vector x = oracle::random_unit(2, rng), y = oracle::random_unit(2, rng),
         z = oracle::random_unit(2, rng);
  DenseTensor cube = cp_reconstruct(Vector::Ones(1), {Matrix(x), Matrix(y), Matrix(z)});
  DenseTensor flat = reshape(cube, {2, 4});
  Matrix expect = x * oracle::naive_kron(z, y).transpose();
  CHECK((Eigen::Map<const Matrix>(flat.data(), 2, 4) - expect).norm() < 1e-14);
}

TEST_CASE("permute_modes") {
  Rng rng(31);
  DenseTensor t = oracle::random_tensor({2, 3, 4}, rng);
  DenseTensor p = permute_modes(t, {2, 0, 1});
  CHECK(p.shape() == std::vector<Index>{4, 2, 3});
  std::vector<Index> idx{1, 2, 3};
  std::vector<Index> pidx{3, 1, 2};
  CHECK(p.data()[oracle::flat_of(pidx, p.shape())] == t.data()[oracle::flat_of(idx, t.shape())]);
  DenseTensor back = permute_modes(p, {1, 2, 0});
  CHECK(back.values() == t.values());
}

TEST_CASE("outer products of unit vectors are Lipschitz in the factors") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    Index d = 2 + static_cast<Index>(rng.raw() % 4);  // up to order 5
    std::vector<Index> dims;
    std::vector<Vector> xs, ys;
    std::vector<Matrix> xf, yf;
    for (Index j = 0; j < d; ++j) {
      Index n = 2 + static_cast<Index>(rng.raw() % 4);
      dims.push_back(n);
      xs.push_back(oracle::random_unit(n, rng));
      ys.push_back(oracle::random_unit(n, rng));
      xf.push_back(xs.back());
      yf.push_back(ys.back());
    }
    DenseTensor tx = cp_reconstruct(Vector::Ones(1), xf);
    DenseTensor ty = cp_reconstruct(Vector::Ones(1), yf);
    std::vector<double> v(tx.values());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= ty.values()[k];
    double lhs = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())).norm();
    double rhs = 0.0;
    for (Index j = 0; j < d; ++j)
      rhs += (xs[static_cast<std::size_t>(j)] - ys[static_cast<std::size_t>(j)]).norm();
    CHECK(rhs - lhs >= -1e-12);
  }
}

TEST_CASE("text format round-trips at full precision") {
  Rng rng(41);
  DenseTensor t = oracle::random_tensor({3, 2, 4}, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  DenseTensor back = read_tensor(ss);
  CHECK(back.shape() == t.shape());
  CHECK(back.values() == t.values());  // exact decimal round trip
}

TEST_CASE("text format errors carry line and column") {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return read_tensor(ss);
  };
  CHECK_THROWS_AS(parse("order 2\ndims 2 x\n1 2 3 4\n"), Error);
  try {
    parse("order 2\ndims 2 x\n1 2 3 4\n");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse("order 1\ndims 2\n1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("end of input") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("shape 2 2\n1 2 3 4\n"), Error);
  CHECK_THROWS_AS(parse("order 2\ndims 2 2\n1 2 3 4 5\n"), Error);
}
