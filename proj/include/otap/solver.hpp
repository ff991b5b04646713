#pragma once

#include <limits>
#include <string>

#include "otap/model.hpp"

namespace otap {

struct SolverConfig {
  double eps1 = 1e-8;        // shift on free-mode updates
  double eps2 = 1e-8;        // shift on orthonormal-mode updates
  double tol = 1e-4;         // relative step stopping threshold
  int max_iter = 2000;
  double sigma_floor = 1e-12;  // |sigma_i| < floor * ||A|| flags a dead column
  bool batched = true;         // unfolding/Khatri-Rao sweeps vs per-column contractions
  bool auto_reduce_rank = false;
};

enum class SolveStatus { Converged, MaxIter, Degenerate };
const char* to_string(SolveStatus s);

/// Per-sweep bookkeeping; feeds both the trace and the descent-identity
/// checks (each free-mode column gains exactly (||vtilde|| + eps1)/2 times
/// its squared step, each orthonormal mode at least (lambda_R + eps2)/2).
struct SweepInfo {
  Index mode = 0;
  Vector shifted_norms;    // free modes: ||v_i omega_i + eps1 u_i|| per column
  Vector column_gains;     // free modes: omega_i <v_i, u_new - u_old> per column
  Vector column_delta_sq;  // free modes: ||u_new - u_old||^2 per column
  double min_singular = std::numeric_limits<double>::quiet_NaN();  // orth: lambda_R of shifted matrix
  double gain = 0.0;       // objective increase contributed by this sweep
  double delta_sq = 0.0;   // squared factor step of this sweep
};

struct WeightUpdateInfo {
  double sigma_norm = 0.0;
  double omega_step = 0.0;
  double gain = 0.0;  // (||sigma||/2) ||omega_new - omega_old||^2, exactly
};

struct IterRecord {
  int iter = 0;
  double H = 0.0;
  double G = 0.0;
  double sigma_norm = 0.0;
  double step_norm = 0.0;
  double omega_step = 0.0;
  double kkt_total = std::numeric_limits<double>::quiet_NaN();  // sampled periodically
  double min_shifted_sv = std::numeric_limits<double>::quiet_NaN();
};

struct IterationTrace {
  std::vector<IterRecord> records;  // records[0] is the initial point
  SolveStatus status = SolveStatus::MaxIter;
  std::vector<std::string> warnings;

  int iterations() const { return records.empty() ? 0 : records.back().iter; }
  double final_kkt() const { return records.empty() ? 0.0 : records.back().kkt_total; }
  void write_csv(std::ostream& os) const;
};

/// One Gauss-Seidel pass over mode j < d-t: every column is pulled toward its
/// gradient (weighted by omega_i, shifted by eps1) and renormalized. A zero
/// shifted vector keeps the previous column.
SweepInfo sweep_nonorthogonal(const DenseTensor& a, FactorSet& state, Index j, double eps1,
                              bool batched = true);

/// One pass over an orthonormal mode j >= d-t: the shifted gradient matrix is
/// projected back onto the Stiefel manifold through its polar factor.
SweepInfo sweep_orthonormal(const DenseTensor& a, FactorSet& state, Index j, double eps2,
                            bool batched = true);

/// Recompute sigma from the current factors and renormalize omega.
WeightUpdateInfo update_weights(const DenseTensor& a, FactorSet& state);

struct SolveResult {
  FactorSet factors;
  IterationTrace trace;
};

/// Full iteration: free-mode sweeps, orthonormal sweeps, weight update,
/// relative-step stopping rule.
SolveResult run(const DenseTensor& a, int r, int t, const SolverConfig& config,
                const FactorSet& init);

}  // namespace otap
