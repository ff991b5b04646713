#include "otap/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace otap {

namespace {

Index checked_element_count(const std::vector<Index>& shape) {
  if (shape.empty()) throw Error(Errc::ShapeMismatch, "tensor order must be at least 1");
  Index total = 1;
  for (Index n : shape) {
    if (n <= 0) throw Error(Errc::ShapeMismatch, "tensor extents must be positive");
    if (total > (static_cast<Index>(1) << 31) / n)
      throw Error(Errc::ShapeMismatch, "tensor too large for dense storage");
    total *= n;
  }
  return total;
}

void require_same_shape(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw Error(Errc::ShapeMismatch, "tensor shapes differ");
}

}  // namespace

DenseTensor DenseTensor::from_data(std::vector<Index> shape, std::vector<double> values) {
  Index total = checked_element_count(shape);
  if (static_cast<Index>(values.size()) != total) {
    std::ostringstream msg;
    msg << "value count " << values.size() << " does not match shape product " << total;
    throw Error(Errc::ShapeMismatch, msg.str());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite entry at flat index " << i;
      throw Error(Errc::NonFiniteEntry, msg.str());
    }
  }
  DenseTensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  return t;
}

DenseTensor DenseTensor::zeros(std::vector<Index> shape) {
  Index total = checked_element_count(shape);
  DenseTensor t;
  t.shape_ = std::move(shape);
  t.values_.assign(static_cast<std::size_t>(total), 0.0);
  return t;
}

double frobenius_norm(const DenseTensor& t) { return t.flat().norm(); }

double inner(const DenseTensor& a, const DenseTensor& b) {
  require_same_shape(a, b);
  return a.flat().dot(b.flat());
}

Matrix unfold(const DenseTensor& t, Index mode) {
  const Index d = t.order();
  if (mode < 0 || mode >= d) throw Error(Errc::InvalidMode, "unfold mode out of range");
  const auto& shape = t.shape();
  const Index n = shape[static_cast<std::size_t>(mode)];
  Index inner_sz = 1, outer_sz = 1;
  for (Index l = 0; l < mode; ++l) inner_sz *= shape[static_cast<std::size_t>(l)];
  for (Index l = mode + 1; l < d; ++l) outer_sz *= shape[static_cast<std::size_t>(l)];

  Matrix m(n, inner_sz * outer_sz);
  const double* src = t.data();
  for (Index o = 0; o < outer_sz; ++o) {
    for (Index in = 0; in < inner_sz; ++in) {
      m.col(o * inner_sz + in) = Eigen::Map<const Vector, 0, Eigen::InnerStride<>>(
          src + in + o * inner_sz * n, n, Eigen::InnerStride<>(inner_sz));
    }
  }
  return m;
}

DenseTensor refold(const Matrix& m, Index mode, std::vector<Index> shape) {
  const Index d = static_cast<Index>(shape.size());
  if (mode < 0 || mode >= d) throw Error(Errc::InvalidMode, "refold mode out of range");
  Index total = checked_element_count(shape);
  const Index n = shape[static_cast<std::size_t>(mode)];
  if (m.rows() != n || m.rows() * m.cols() != total)
    throw Error(Errc::ShapeMismatch, "unfolding dimensions do not match target shape");
  Index inner_sz = 1, outer_sz = 1;
  for (Index l = 0; l < mode; ++l) inner_sz *= shape[static_cast<std::size_t>(l)];
  for (Index l = mode + 1; l < d; ++l) outer_sz *= shape[static_cast<std::size_t>(l)];

  DenseTensor t = DenseTensor::zeros(std::move(shape));
  double* dst = t.data();
  for (Index o = 0; o < outer_sz; ++o) {
    for (Index in = 0; in < inner_sz; ++in) {
      Eigen::Map<Vector, 0, Eigen::InnerStride<>>(dst + in + o * inner_sz * n, n,
                                                  Eigen::InnerStride<>(inner_sz)) =
          m.col(o * inner_sz + in);
    }
  }
  return t;
}

DenseTensor contract_mode(const DenseTensor& t, Index mode, const Vector& v) {
  const Index d = t.order();
  if (d < 2) throw Error(Errc::InvalidMode, "contract_mode needs order >= 2");
  if (mode < 0 || mode >= d) throw Error(Errc::InvalidMode, "contraction mode out of range");
  const auto& shape = t.shape();
  const Index n = shape[static_cast<std::size_t>(mode)];
  if (v.size() != n) throw Error(Errc::ShapeMismatch, "contraction vector length mismatch");

  Index inner_sz = 1, outer_sz = 1;
  for (Index l = 0; l < mode; ++l) inner_sz *= shape[static_cast<std::size_t>(l)];
  for (Index l = mode + 1; l < d; ++l) outer_sz *= shape[static_cast<std::size_t>(l)];

  std::vector<Index> out_shape;
  out_shape.reserve(static_cast<std::size_t>(d - 1));
  for (Index l = 0; l < d; ++l)
    if (l != mode) out_shape.push_back(shape[static_cast<std::size_t>(l)]);

  DenseTensor out = DenseTensor::zeros(std::move(out_shape));
  const double* src = t.data();
  double* dst = out.data();
  for (Index o = 0; o < outer_sz; ++o) {
    Eigen::Map<const Matrix> block(src + o * inner_sz * n, inner_sz, n);
    Eigen::Map<Vector>(dst + o * inner_sz, inner_sz) = block * v;
  }
  return out;
}

double full_contract(const DenseTensor& t, const std::vector<Vector>& vectors) {
  const Index d = t.order();
  if (static_cast<Index>(vectors.size()) != d)
    throw Error(Errc::ShapeMismatch, "need one vector per mode");
  for (Index l = 0; l < d; ++l)
    if (vectors[static_cast<std::size_t>(l)].size() != t.extent(l))
      throw Error(Errc::ShapeMismatch, "contraction vector length mismatch");

  // Contract the last (slowest-varying) mode repeatedly; each step is one
  // matrix-vector product on the contiguous reshaped view.
  std::vector<double> buf_a(t.values());
  std::vector<double> buf_b;
  Index rest = t.size();
  for (Index m = d - 1; m >= 1; --m) {
    const Index n = t.extent(m);
    rest /= n;
    buf_b.resize(static_cast<std::size_t>(rest));
    Eigen::Map<const Matrix> mat(buf_a.data(), rest, n);
    Eigen::Map<Vector>(buf_b.data(), rest) = mat * vectors[static_cast<std::size_t>(m)];
    buf_a.swap(buf_b);
  }
  return Eigen::Map<const Vector>(buf_a.data(), t.extent(0)).dot(vectors[0]);
}

Vector rank1_contract(const DenseTensor& t, const std::vector<Vector>& vectors, Index skip) {
  const Index d = t.order();
  if (static_cast<Index>(vectors.size()) != d)
    throw Error(Errc::ShapeMismatch, "need one vector slot per mode");
  if (skip < 0 || skip >= d) throw Error(Errc::InvalidMode, "skip mode out of range");
  for (Index l = 0; l < d; ++l)
    if (l != skip && vectors[static_cast<std::size_t>(l)].size() != t.extent(l))
      throw Error(Errc::ShapeMismatch, "contraction vector length mismatch");

  // Trailing modes first (right matvec on the reshaped view), then leading
  // modes (left matvec), leaving only the skipped mode.
  std::vector<double> buf_a(t.values());
  std::vector<double> buf_b;
  Index total = t.size();
  for (Index m = d - 1; m > skip; --m) {
    const Index n = t.extent(m);
    total /= n;
    buf_b.resize(static_cast<std::size_t>(total));
    Eigen::Map<const Matrix> mat(buf_a.data(), total, n);
    Eigen::Map<Vector>(buf_b.data(), total) = mat * vectors[static_cast<std::size_t>(m)];
    buf_a.swap(buf_b);
  }
  for (Index m = 0; m < skip; ++m) {
    const Index n = t.extent(m);
    total /= n;
    buf_b.resize(static_cast<std::size_t>(total));
    Eigen::Map<const Matrix> mat(buf_a.data(), n, total);
    Eigen::Map<Eigen::RowVectorXd>(buf_b.data(), total) =
        vectors[static_cast<std::size_t>(m)].transpose() * mat;
    buf_a.swap(buf_b);
  }
  return Eigen::Map<const Vector>(buf_a.data(), t.extent(skip));
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw Error(Errc::ColsMismatch, "Khatri-Rao factors must have equal column counts");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index c = 0; c < a.cols(); ++c)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(c).segment(i * b.rows(), b.rows()) = a(i, c) * b.col(c);
  return out;
}

DenseTensor cp_reconstruct(const Vector& sigma, const std::vector<Matrix>& factors) {
  const Index d = static_cast<Index>(factors.size());
  if (d < 1) throw Error(Errc::ShapeMismatch, "need at least one factor matrix");
  const Index r = sigma.size();
  std::vector<Index> shape(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    const Matrix& u = factors[static_cast<std::size_t>(j)];
    if (u.cols() != r) throw Error(Errc::ShapeMismatch, "factor column count != weight count");
    shape[static_cast<std::size_t>(j)] = u.rows();
  }
  if (d == 1) {
    Vector v = factors[0] * sigma;
    return DenseTensor::from_data(shape, std::vector<double>(v.data(), v.data() + v.size()));
  }
  // Mode-1 unfolding is U_1 diag(sigma) K^T with K the Khatri-Rao chain of the
  // remaining factors, highest mode first; its column-major layout is already
  // the tensor's flat storage.
  Matrix k = factors[static_cast<std::size_t>(d - 1)];
  for (Index j = d - 2; j >= 1; --j) k = khatri_rao(k, factors[static_cast<std::size_t>(j)]);
  Matrix m = factors[0] * sigma.asDiagonal() * k.transpose();
  DenseTensor t = DenseTensor::zeros(shape);
  Eigen::Map<Matrix>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

DenseTensor reshape(const DenseTensor& t, std::vector<Index> new_shape) {
  Index total = checked_element_count(new_shape);
  if (total != t.size())
    throw Error(Errc::SizeMismatch, "reshape must preserve the element count");
  return DenseTensor::from_data(std::move(new_shape), t.values());
}

DenseTensor permute_modes(const DenseTensor& t, const std::vector<Index>& perm) {
  const Index d = t.order();
  if (static_cast<Index>(perm.size()) != d)
    throw Error(Errc::InvalidMode, "permutation length must equal the order");
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  for (Index p : perm) {
    if (p < 0 || p >= d || seen[static_cast<std::size_t>(p)])
      throw Error(Errc::InvalidMode, "invalid mode permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }

  std::vector<Index> old_stride(static_cast<std::size_t>(d), 1);
  for (Index l = 1; l < d; ++l)
    old_stride[static_cast<std::size_t>(l)] =
        old_stride[static_cast<std::size_t>(l - 1)] * t.extent(l - 1);

  std::vector<Index> new_shape(static_cast<std::size_t>(d));
  std::vector<Index> gather_stride(static_cast<std::size_t>(d));
  for (Index m = 0; m < d; ++m) {
    new_shape[static_cast<std::size_t>(m)] = t.extent(perm[static_cast<std::size_t>(m)]);
    gather_stride[static_cast<std::size_t>(m)] =
        old_stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(m)])];
  }

  DenseTensor out = DenseTensor::zeros(new_shape);
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  const double* src = t.data();
  double* dst = out.data();
  Index src_flat = 0;
  for (Index flat = 0; flat < out.size(); ++flat) {
    dst[flat] = src[src_flat];
    for (Index m = 0; m < d; ++m) {
      auto mm = static_cast<std::size_t>(m);
      src_flat += gather_stride[mm];
      if (++idx[mm] < new_shape[mm]) break;
      src_flat -= gather_stride[mm] * new_shape[mm];
      idx[mm] = 0;
    }
  }
  return out;
}

namespace {

// Tokenizer that tracks line/column for parse diagnostics.
class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}

  bool next(std::string& tok) {
    tok.clear();
    int c;
    while ((c = is_.get()) != EOF) {
      advance(c);
      if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    tok_line_ = line_;
    tok_col_ = col_ - 1;
    tok.push_back(static_cast<char>(c));
    while ((c = is_.peek()) != EOF && !std::isspace(c)) {
      tok.push_back(static_cast<char>(is_.get()));
      advance(tok.back());
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "line " << tok_line_ << ", column " << tok_col_ << ": " << msg;
    throw Error(Errc::ParseError, os.str());
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) {
      std::ostringstream os;
      os << "line " << line_ << ", column " << col_ << ": unexpected end of input, expected "
         << what;
      throw Error(Errc::ParseError, os.str());
    }
    return tok;
  }

  Index expect_positive_int(const char* what) {
    std::string tok = expect(what);
    char* end = nullptr;
    long long v = std::strtoll(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || v <= 0) fail(std::string("expected ") + what);
    return static_cast<Index>(v);
  }

  double expect_double() {
    std::string tok = expect("a decimal value");
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail("malformed decimal value '" + tok + "'");
    if (!std::isfinite(v)) fail("non-finite value '" + tok + "'");
    return v;
  }

 private:
  void advance(int c) {
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
  }

  std::istream& is_;
  int line_ = 1, col_ = 1;
  int tok_line_ = 1, tok_col_ = 1;
};

}  // namespace

void write_tensor(std::ostream& os, const DenseTensor& t) {
  os << "order " << t.order() << "\n";
  os << "dims";
  for (Index n : t.shape()) os << ' ' << n;
  os << "\n";
  char buf[32];
  const auto& v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf << ((i % 8 == 7 || i + 1 == v.size()) ? '\n' : ' ');
  }
}

DenseTensor read_tensor(std::istream& is) {
  TokenReader r(is);
  std::string tok = r.expect("keyword 'order'");
  if (tok != "order") r.fail("expected keyword 'order', got '" + tok + "'");
  Index d = r.expect_positive_int("the tensor order");
  tok = r.expect("keyword 'dims'");
  if (tok != "dims") r.fail("expected keyword 'dims', got '" + tok + "'");
  std::vector<Index> shape(static_cast<std::size_t>(d));
  Index total = 1;
  for (Index j = 0; j < d; ++j) {
    shape[static_cast<std::size_t>(j)] = r.expect_positive_int("a positive extent");
    total *= shape[static_cast<std::size_t>(j)];
  }
  std::vector<double> values(static_cast<std::size_t>(total));
  for (Index i = 0; i < total; ++i) values[static_cast<std::size_t>(i)] = r.expect_double();
  if (r.next(tok)) r.fail("trailing data '" + tok + "' after tensor values");
  return DenseTensor::from_data(std::move(shape), std::move(values));
}

void write_tensor_file(const std::string& path, const DenseTensor& t) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  write_tensor(os, t);
  if (!os) throw Error(Errc::IoError, "write to '" + path + "' failed");
}

DenseTensor read_tensor_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::IoError, "cannot open '" + path + "'");
  try {
    return read_tensor(is);
  } catch (const Error& e) {
    if (e.code() != Errc::ParseError) throw;
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

}  // namespace otap
