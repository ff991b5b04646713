#include "otap/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace otap {

namespace {

constexpr double kUnitColTol = 1e-10;
constexpr double kOrthTol = 1e-8;
constexpr double kOmegaTol = 1e-10;

void require_consistent(const DenseTensor& a, const FactorSet& f) {
  if (f.order() != a.order())
    throw Error(Errc::ShapeMismatch, "factor count does not match tensor order");
  for (Index j = 0; j < a.order(); ++j) {
    const Matrix& u = f.U[static_cast<std::size_t>(j)];
    if (u.rows() != a.extent(j) || u.cols() != f.R)
      throw Error(Errc::ShapeMismatch, "factor matrix dimensions do not match the tensor");
  }
}

void refresh_sigma(const DenseTensor& a, FactorSet& f) {
  require_consistent(a, f);
  f.sigma.resize(f.R);
  for (int i = 0; i < f.R; ++i) f.sigma(i) = full_contract(a, f.columns(i));
}

/// Columns of V_j: the tensor contracted with every factor column except
/// mode j's.
Matrix gradient_matrix(const DenseTensor& a, const FactorSet& f, Index j) {
  Matrix v(a.extent(j), f.R);
  for (int i = 0; i < f.R; ++i) v.col(i) = rank1_contract(a, f.columns(i), j);
  return v;
}

}  // namespace

std::vector<Vector> FactorSet::columns(Index i) const {
  std::vector<Vector> cols;
  cols.reserve(U.size());
  for (const Matrix& u : U) cols.push_back(u.col(i));
  return cols;
}

std::vector<Violation> feasibility_check(const FactorSet& f) {
  std::vector<Violation> out;
  const int d = static_cast<int>(f.U.size());
  if (f.R < 1 || f.t < 1 || f.t > d || d < 1) {
    out.push_back({"R >= 1 and 1 <= t <= order are required", 0.0});
    return out;
  }
  for (int j = 0; j < d; ++j) {
    const Matrix& u = f.U[static_cast<std::size_t>(j)];
    if (u.cols() != f.R) {
      std::ostringstream os;
      os << "mode " << j + 1 << ": factor has " << u.cols() << " columns, expected " << f.R;
      out.push_back({os.str(), 0.0});
      continue;
    }
    if (j < d - f.t) {
      for (int i = 0; i < f.R; ++i) {
        double dev = std::abs(u.col(i).norm() - 1.0);
        if (dev > kUnitColTol) {
          std::ostringstream os;
          os << "mode " << j + 1 << ", column " << i + 1 << ": norm deviates from 1";
          out.push_back({os.str(), dev});
        }
      }
    } else {
      if (u.rows() < f.R) {
        std::ostringstream os;
        os << "mode " << j + 1 << ": extent " << u.rows() << " < R = " << f.R
           << " on an orthonormal mode";
        out.push_back({os.str(), static_cast<double>(f.R - u.rows())});
      }
      double dev = (u.transpose() * u - Matrix::Identity(f.R, f.R)).norm();
      if (dev > kOrthTol) {
        std::ostringstream os;
        os << "mode " << j + 1 << ": columns not orthonormal";
        out.push_back({os.str(), dev});
      }
    }
  }
  if (f.sigma.size() != f.R || f.omega.size() != f.R) {
    out.push_back({"sigma/omega length does not match R", 0.0});
    return out;
  }
  if (f.sigma.norm() > 0.0) {
    double dev = (f.omega - f.sigma / f.sigma.norm()).norm();
    if (dev > kOmegaTol) out.push_back({"omega is not sigma normalized to unit length", dev});
  }
  return out;
}

double objective_G(const DenseTensor& a, FactorSet& f) {
  refresh_sigma(a, f);
  return f.sigma.squaredNorm();
}

double objective_H(const DenseTensor& a, FactorSet& f) {
  refresh_sigma(a, f);
  if (f.omega.size() != f.R) throw Error(Errc::ShapeMismatch, "omega length does not match R");
  return f.sigma.dot(f.omega);
}

KktReport kkt_residual(const DenseTensor& a, const FactorSet& f) {
  require_consistent(a, f);
  const int d = static_cast<int>(f.U.size());
  const int free = d - f.t;

  Vector sigma(f.R);
  for (int i = 0; i < f.R; ++i) sigma(i) = full_contract(a, f.columns(i));

  KktReport rep;
  rep.rho.resize(d);
  rep.eta = Matrix::Zero(std::max(free, 0), f.R);
  for (int j = 0; j < free; ++j)
    for (int i = 0; i < f.R; ++i) rep.eta(j, i) = sigma(i) * sigma(i);

  for (int j = 0; j < d; ++j) {
    const Matrix& u = f.U[static_cast<std::size_t>(j)];
    Matrix v = gradient_matrix(a, f, j);
    if (j < free) {
      double worst = 0.0;
      for (int i = 0; i < f.R; ++i)
        worst = std::max(worst, (v.col(i) - sigma(i) * u.col(i)).norm());
      rep.rho(j) = worst;
    } else {
      Matrix w = v * sigma.asDiagonal();
      Matrix utw = u.transpose() * w;
      double range_defect = (w - u * utw).norm();
      double skew = (utw - utw.transpose()).norm();
      rep.rho(j) = range_defect + skew;
      rep.lambda.push_back(0.5 * (utw + utw.transpose()));
    }
  }
  rep.total = rep.rho.maxCoeff() / (1.0 + sigma.norm());
  return rep;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["values_col_major"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Index rows = j.at("rows").get<Index>();
  Index cols = j.at("cols").get<Index>();
  auto vals = j.at("values_col_major").get<std::vector<double>>();
  if (rows < 1 || cols < 1 || static_cast<Index>(vals.size()) != rows * cols)
    throw Error(Errc::ParseError, "matrix dimensions do not match its value count");
  for (double v : vals)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteEntry, "non-finite matrix entry");
  return Eigen::Map<const Matrix>(vals.data(), rows, cols);
}

}  // namespace

void save_factors(std::ostream& os, const FactorSet& f) {
  nlohmann::json j;
  j["R"] = f.R;
  j["t"] = f.t;
  j["sigma"] = std::vector<double>(f.sigma.data(), f.sigma.data() + f.sigma.size());
  j["omega"] = std::vector<double>(f.omega.data(), f.omega.data() + f.omega.size());
  j["U"] = nlohmann::json::array();
  for (const Matrix& u : f.U) j["U"].push_back(matrix_to_json(u));
  os << j.dump(2) << "\n";
}

FactorSet load_factors(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("invalid factor JSON: ") + e.what());
  }
  try {
    FactorSet f;
    f.R = j.at("R").get<int>();
    f.t = j.at("t").get<int>();
    auto sigma = j.at("sigma").get<std::vector<double>>();
    auto omega = j.at("omega").get<std::vector<double>>();
    f.sigma = Eigen::Map<const Vector>(sigma.data(), static_cast<Index>(sigma.size()));
    f.omega = Eigen::Map<const Vector>(omega.data(), static_cast<Index>(omega.size()));
    for (const auto& u : j.at("U")) f.U.push_back(matrix_from_json(u));
    if (f.R < 1 || f.t < 1 || f.t > static_cast<int>(f.U.size()))
      throw Error(Errc::ParseError, "factor JSON has inconsistent R/t");
    for (const Matrix& u : f.U)
      if (u.cols() != f.R) throw Error(Errc::ParseError, "factor column count != R");
    if (f.sigma.size() != f.R || f.omega.size() != f.R)
      throw Error(Errc::ParseError, "sigma/omega length != R");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("invalid factor JSON: ") + e.what());
  }
}

void save_factors_file(const std::string& path, const FactorSet& f) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  save_factors(os, f);
  if (!os) throw Error(Errc::IoError, "write to '" + path + "' failed");
}

FactorSet load_factors_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::IoError, "cannot open '" + path + "'");
  return load_factors(is);
}

}  // namespace otap
