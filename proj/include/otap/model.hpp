#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "otap/tensor.hpp"

namespace otap {

/// Feasible point of the constrained approximation problem: R weighted rank-1
/// terms whose last t factor matrices are columnwise orthonormal and whose
/// first d-t factor matrices have unit-norm columns. omega is the unit-norm
/// auxiliary weight vector tracking sigma.
struct FactorSet {
  int R = 0;
  int t = 0;
  std::vector<Matrix> U;  // U[j] is n_j x R
  Vector sigma;
  Vector omega;

  Index order() const { return static_cast<Index>(U.size()); }
  int free_modes() const { return static_cast<int>(U.size()) - t; }

  /// Column i of every factor, as contraction input.
  std::vector<Vector> columns(Index i) const;
};

struct Violation {
  std::string what;
  double magnitude = 0.0;
};

/// Empty result iff every FactorSet invariant holds at its stated tolerance.
/// Reports, never throws.
std::vector<Violation> feasibility_check(const FactorSet& f);

/// First-order stationarity residuals. For free modes rho_j is the worst
/// column residual ||v_{j,i} - sigma_i u_{j,i}||; for orthonormal modes, with
/// W_j = V_j diag(sigma), it is the range defect ||(I - U_j U_j^T) W_j||_F
/// plus the skew part ||U_j^T W_j - (U_j^T W_j)^T||_F. total is the maximum
/// over modes of rho_j / (1 + ||sigma||).
struct KktReport {
  Vector rho;                  // one residual per mode
  Matrix eta;                  // (d-t) x R multiplier estimates sigma_i^2
  std::vector<Matrix> lambda;  // t symmetric R x R multiplier estimates
  double total = 0.0;
};

/// Maximization objective: sum of squared weights sigma_i = <A, x_j u_{j,i}>.
/// Refreshes f.sigma from the current factors.
double objective_G(const DenseTensor& a, FactorSet& f);

/// Auxiliary cost sum_i sigma_i omega_i; equals sqrt(G) when omega is aligned
/// with sigma. Refreshes f.sigma, leaves f.omega untouched.
double objective_H(const DenseTensor& a, FactorSet& f);

KktReport kkt_residual(const DenseTensor& a, const FactorSet& f);

// JSON serialization; doubles survive round-trips exactly.
void save_factors(std::ostream& os, const FactorSet& f);
FactorSet load_factors(std::istream& is);
void save_factors_file(const std::string& path, const FactorSet& f);
FactorSet load_factors_file(const std::string& path);

}  // namespace otap
