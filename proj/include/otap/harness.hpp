#pragma once

#include <cstdint>
#include <utility>

#include "otap/solver.hpp"

namespace otap {

enum class InitKind { Procedure, Random };
enum class EntryDist { Uniform, Normal };

struct ExperimentSpec {
  std::vector<Index> dims;
  int R = 1;
  int t = 1;
  double beta = 0.1;
  double eps1 = 1e-8;
  double eps2 = 1e-8;
  int n_instances = 1;
  std::uint64_t seed_base = 0;
  InitKind init = InitKind::Procedure;
};

struct InstanceResult {
  std::uint64_t seed = 0;
  int iterations = 0;
  double seconds = 0.0;
  double rel_err = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  bool failed = false;
  std::string error;
};

struct ResultRow {
  ExperimentSpec spec;
  double mean_iter = 0.0;
  double median_iter = 0.0;
  double mean_time_s = 0.0;
  double mean_rel_err = 0.0;
  int n_converged = 0;
  int n_maxiter = 0;
  int n_degenerate = 0;
  std::vector<InstanceResult> instances;
};

/// Planted low-rank tensor plus noise: A = B/||B|| + beta * N/||N|| with
/// B the R-term model built from uniform [-1,1] draws (last t factor
/// matrices orthonormalized, the rest column-normalized) and N an
/// unstructured uniform [-1,1] tensor. The returned truth carries the
/// constrained factors and the weights of B/||B||.
std::pair<DenseTensor, FactorSet> gen_synthetic(const std::vector<Index>& dims, int r, int t,
                                                double beta, std::uint64_t seed);

/// Frobenius distance between the stacked factor matrices, minimized over
/// column permutations and per-(mode,column) signs, normalized by the
/// truth's stacked norm. Exact linear assignment on the column-separable
/// cost.
double rel_err(const FactorSet& truth, const FactorSet& recovered);

/// Largest k such that every k columns are linearly independent
/// (numerically: smallest singular value of each subset above 1e-10 times
/// its largest). Guarded to at most 12 columns.
int kruskal_rank(const Matrix& m);

struct UniquenessVerdict {
  bool certified = false;  // sufficient condition holds; false only means "not certified"
  std::string reason;
};

/// Sufficient essential-uniqueness check from the Kruskal-rank condition,
/// specialized by the number of orthonormal factors.
UniquenessVerdict uniqueness_check(const FactorSet& f);

InstanceResult run_instance(const ExperimentSpec& spec, int index);

/// Generate/initialize/solve/score n_instances seeded instances (possibly on
/// a worker pool, see OTAP_THREADS) and aggregate.
ResultRow run_experiment(const ExperimentSpec& spec);

/// Mean of G(procedure init) / G(random init) over seeded random-entry
/// tensors.
double init_ratio_experiment(const std::vector<Index>& dims, int r, int t, int n_instances,
                             std::uint64_t seed, EntryDist dist);

std::string result_csv_header();
std::string format_result_csv_row(const ResultRow& row);

/// Appends one CSV row (writing the header only when the file is new) plus a
/// JSON-lines seed manifest next to it for exact reproduction.
void append_result_csv(const std::string& path, const ResultRow& row);

/// Worker pool width: OTAP_THREADS if set (0 meaning serial), otherwise the
/// hardware concurrency.
int experiment_threads();

}  // namespace otap
