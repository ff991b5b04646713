#include "otap/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "otap/linalg.hpp"

namespace otap {

namespace {

constexpr int kKktStride = 10;

Matrix& factor(FactorSet& f, Index j) { return f.U[static_cast<std::size_t>(j)]; }

/// Khatri-Rao chain of all factors except mode `skip`, highest mode first, so
/// row indices match the unfolding's column indexing.
Matrix kr_chain(const std::vector<Matrix>& u, Index skip) {
  const Index d = static_cast<Index>(u.size());
  Matrix k;
  bool started = false;
  for (Index j = d - 1; j >= 0; --j) {
    if (j == skip) continue;
    if (!started) {
      k = u[static_cast<std::size_t>(j)];
      started = true;
    } else {
      k = khatri_rao(k, u[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

/// Gradient columns v_{j,i} for all i at the current (partially updated)
/// factors, via the unfolding when batched.
Matrix gradient_block(const Matrix* unfolding, const DenseTensor& a, const FactorSet& f,
                      Index j, bool batched) {
  if (batched) {
    if (unfolding) return *unfolding * kr_chain(f.U, j);
    Matrix unf = unfold(a, j);
    return unf * kr_chain(f.U, j);
  }
  Matrix v(a.extent(j), f.R);
  for (int i = 0; i < f.R; ++i) v.col(i) = rank1_contract(a, f.columns(i), j);
  return v;
}

SweepInfo sweep_nonorth_impl(const Matrix* unfolding, const DenseTensor& a, FactorSet& state,
                             Index j, double eps1, bool batched) {
  const int r = state.R;
  Matrix v = gradient_block(unfolding, a, state, j, batched);
  SweepInfo info;
  info.mode = j;
  info.shifted_norms.resize(r);
  info.column_gains.resize(r);
  info.column_delta_sq.resize(r);
  Matrix& u = factor(state, j);
  for (int i = 0; i < r; ++i) {
    Vector u_old = u.col(i);
    Vector shifted = v.col(i) * state.omega(i) + eps1 * u_old;
    double nrm = shifted.norm();
    info.shifted_norms(i) = nrm;
    // nrm can vanish only with eps1 = 0 and a zero weighted gradient; any
    // unit vector is then a maximizer and keeping the old one preserves
    // monotonicity.
    Vector u_new = nrm > 0.0 ? Vector(shifted / nrm) : u_old;
    info.column_gains(i) = state.omega(i) * v.col(i).dot(u_new - u_old);
    info.column_delta_sq(i) = (u_new - u_old).squaredNorm();
    u.col(i) = u_new;
  }
  info.gain = info.column_gains.sum();
  info.delta_sq = info.column_delta_sq.sum();
  return info;
}

SweepInfo sweep_orth_impl(const Matrix* unfolding, const DenseTensor& a, FactorSet& state,
                          Index j, double eps2, bool batched) {
  const int r = state.R;
  if (a.extent(j) < r)
    throw Error(Errc::RankTooLarge, "rank exceeds mode extent on an orthonormal mode");
  Matrix v = gradient_block(unfolding, a, state, j, batched);
  Matrix weighted = v * state.omega.asDiagonal();
  Matrix shifted = weighted + eps2 * factor(state, j);
  SvdThin svd = thin_svd(shifted);
  Matrix u_new = svd.P * svd.Q.transpose();

  SweepInfo info;
  info.mode = j;
  info.min_singular = svd.lambda(r - 1);
  info.gain = ((u_new - factor(state, j)).array() * weighted.array()).sum();
  info.delta_sq = (u_new - factor(state, j)).squaredNorm();
  factor(state, j) = u_new;
  return info;
}

void require_mode_range(const FactorSet& state, Index j, bool orthonormal) {
  const Index d = state.order();
  const Index free = d - state.t;
  if (orthonormal ? (j < free || j >= d) : (j < 0 || j >= free))
    throw Error(Errc::InvalidMode, "sweep mode does not match its constraint block");
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

SweepInfo sweep_nonorthogonal(const DenseTensor& a, FactorSet& state, Index j, double eps1,
                              bool batched) {
  require_mode_range(state, j, false);
  return sweep_nonorth_impl(nullptr, a, state, j, eps1, batched);
}

SweepInfo sweep_orthonormal(const DenseTensor& a, FactorSet& state, Index j, double eps2,
                            bool batched) {
  require_mode_range(state, j, true);
  return sweep_orth_impl(nullptr, a, state, j, eps2, batched);
}

WeightUpdateInfo update_weights(const DenseTensor& a, FactorSet& state) {
  Vector sigma(state.R);
  for (int i = 0; i < state.R; ++i) sigma(i) = full_contract(a, state.columns(i));
  double ns = sigma.norm();
  if (ns == 0.0) throw Error(Errc::DegenerateSigma, "all weights vanished");
  Vector omega_new = sigma / ns;
  WeightUpdateInfo info;
  info.sigma_norm = ns;
  if (state.omega.size() == sigma.size()) {
    info.omega_step = (omega_new - state.omega).norm();
    info.gain = 0.5 * ns * (omega_new - state.omega).squaredNorm();
  }
  state.sigma = std::move(sigma);
  state.omega = std::move(omega_new);
  return info;
}

void IterationTrace::write_csv(std::ostream& os) const {
  os << "iter,H,G,sigma_norm,step_norm,omega_step,kkt_total\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    if (std::isnan(v)) {
      os << sep;
      return;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << sep;
  };
  for (const IterRecord& r : records) {
    os << r.iter << ',';
    put(r.H, ',');
    put(r.G, ',');
    put(r.sigma_norm, ',');
    put(r.step_norm, ',');
    put(r.omega_step, ',');
    put(r.kkt_total, '\n');
  }
}

SolveResult run(const DenseTensor& a, int r, int t, const SolverConfig& config,
                const FactorSet& init) {
  const Index d = a.order();
  if (init.R != r || init.t != t || init.order() != d)
    throw Error(Errc::InfeasibleInit, "initializer does not match the requested problem");
  if (config.tol <= 0.0 || config.max_iter < 1 || config.eps1 < 0.0 || config.eps2 < 0.0)
    throw Error(Errc::InfeasibleInit, "invalid solver configuration");
  for (Index j = d - t; j < d; ++j)
    if (a.extent(j) < r) throw Error(Errc::RankTooLarge, "rank exceeds mode extent");

  FactorSet state = init;
  state.sigma.resize(r);
  for (int i = 0; i < r; ++i) state.sigma(i) = full_contract(a, state.columns(i));
  double ns = state.sigma.norm();
  if (ns == 0.0) throw Error(Errc::DegenerateInitializer, "initializer has zero weight vector");
  state.omega = state.sigma / ns;

  {
    std::vector<Violation> bad = feasibility_check(state);
    if (!bad.empty())
      throw Error(Errc::InfeasibleInit, "infeasible initializer: " + bad.front().what);
  }

  const double a_norm = frobenius_norm(a);
  std::vector<Matrix> unfolds;
  if (config.batched) {
    unfolds.reserve(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) unfolds.push_back(unfold(a, j));
  }

  SolveResult out;
  IterationTrace& trace = out.trace;
  trace.records.push_back(
      {0, ns, ns * ns, ns, 0.0, 0.0, kkt_residual(a, state).total,
       std::numeric_limits<double>::quiet_NaN()});

  bool degenerate = false;
  bool converged = false;
  for (int k = 1; k <= config.max_iter; ++k) {
    std::vector<Matrix> prev_u = state.U;
    double min_sv = std::numeric_limits<double>::infinity();

    for (Index j = 0; j < d - t; ++j)
      sweep_nonorth_impl(config.batched ? &unfolds[static_cast<std::size_t>(j)] : nullptr, a,
                         state, j, config.eps1, config.batched);
    for (Index j = d - t; j < d; ++j) {
      SweepInfo info =
          sweep_orth_impl(config.batched ? &unfolds[static_cast<std::size_t>(j)] : nullptr, a,
                          state, j, config.eps2, config.batched);
      min_sv = std::min(min_sv, info.min_singular);
    }
    WeightUpdateInfo wu = update_weights(a, state);

    std::vector<int> dead;
    for (int i = 0; i < state.R; ++i)
      if (std::abs(state.sigma(i)) < config.sigma_floor * a_norm) dead.push_back(i);
    if (!dead.empty()) {
      for (int i : dead) {
        std::ostringstream os;
        os << "iteration " << k << ": |sigma_" << i + 1 << "| = " << std::abs(state.sigma(i))
           << " is below " << config.sigma_floor << " * ||A||; column " << i + 1
           << " is degenerate, consider reducing the rank";
        trace.warnings.push_back(os.str());
      }
    }

    double step_sq = 0.0, prev_sq = 0.0;
    for (Index j = 0; j < d; ++j) {
      step_sq += (factor(state, j) - prev_u[static_cast<std::size_t>(j)]).squaredNorm();
      prev_sq += prev_u[static_cast<std::size_t>(j)].squaredNorm();
    }
    double step = std::sqrt(step_sq);
    double rel = step / std::sqrt(prev_sq);

    bool stop = rel <= config.tol || k == config.max_iter;
    IterRecord rec;
    rec.iter = k;
    rec.H = wu.sigma_norm;
    rec.G = wu.sigma_norm * wu.sigma_norm;
    rec.sigma_norm = wu.sigma_norm;
    rec.step_norm = step;
    rec.omega_step = wu.omega_step;
    rec.min_shifted_sv = min_sv;
    if (k % kKktStride == 0 || stop) rec.kkt_total = kkt_residual(a, state).total;
    trace.records.push_back(rec);

    if (!dead.empty()) {
      if (config.auto_reduce_rank) {
        // Drop the dead columns and restart the sweeps with the reduced rank.
        std::vector<int> keep;
        for (int i = 0; i < state.R; ++i)
          if (std::find(dead.begin(), dead.end(), i) == dead.end()) keep.push_back(i);
        if (keep.empty()) throw Error(Errc::DegenerateSigma, "every column is degenerate");
        FactorSet reduced;
        reduced.R = static_cast<int>(keep.size());
        reduced.t = state.t;
        reduced.U.resize(state.U.size());
        for (Index j = 0; j < d; ++j) {
          factor(reduced, j).resize(a.extent(j), reduced.R);
          for (std::size_t c = 0; c < keep.size(); ++c)
            factor(reduced, j).col(static_cast<Index>(c)) =
                factor(state, j).col(keep[c]);
        }
        reduced.sigma.resize(reduced.R);
        for (std::size_t c = 0; c < keep.size(); ++c)
          reduced.sigma(static_cast<Index>(c)) = state.sigma(keep[c]);
        reduced.omega = reduced.sigma / reduced.sigma.norm();
        state = std::move(reduced);
        std::ostringstream os;
        os << "iteration " << k << ": dropped " << dead.size()
           << " degenerate column(s), continuing with R = " << state.R;
        trace.warnings.push_back(os.str());
        continue;
      }
      degenerate = true;
    }

    if (rel <= config.tol) {
      converged = true;
      break;
    }
  }

  if (trace.records.size() > 1 && std::isnan(trace.records.back().kkt_total))
    trace.records.back().kkt_total = kkt_residual(a, state).total;
  trace.status = degenerate ? SolveStatus::Degenerate
                            : (converged ? SolveStatus::Converged : SolveStatus::MaxIter);
  out.factors = std::move(state);
  return out;
}

}  // namespace otap
