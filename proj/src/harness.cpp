#include "otap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "otap/init.hpp"
#include "otap/linalg.hpp"
#include "otap/rng.hpp"

namespace otap {

namespace {

constexpr std::uint64_t kInitSeedSalt = 0x9e3779b97f4a7c15ull;

// Exact linear assignment (shortest augmenting path with potentials),
// O(n^3). Returns row[col].
std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace

std::pair<DenseTensor, FactorSet> gen_synthetic(const std::vector<Index>& dims, int r, int t,
                                                double beta, std::uint64_t seed) {
  const Index d = static_cast<Index>(dims.size());
  if (d < 1 || r < 1 || t < 1 || t > d || beta < 0.0)
    throw Error(Errc::ShapeMismatch, "invalid synthetic-instance parameters");
  for (Index j = d - t; j < d; ++j)
    if (dims[static_cast<std::size_t>(j)] < r)
      throw Error(Errc::RankTooLarge, "rank exceeds mode extent");

  Rng rng(seed);
  FactorSet truth;
  truth.R = r;
  truth.t = t;
  truth.U.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Matrix& u = truth.U[static_cast<std::size_t>(j)];
    u.resize(dims[static_cast<std::size_t>(j)], r);
    for (Index k = 0; k < u.size(); ++k) u.data()[k] = rng.uniform_pm1();
    if (j < d - t) {
      for (int i = 0; i < r; ++i) u.col(i).normalize();
    } else {
      u = polar_decompose(u).U;
    }
  }
  Vector sigma(r);
  for (int i = 0; i < r; ++i) sigma(i) = rng.uniform_pm1();

  DenseTensor model = cp_reconstruct(sigma, truth.U);
  double model_norm = frobenius_norm(model);
  if (model_norm == 0.0) throw Error(Errc::DegenerateSigma, "synthetic model collapsed to zero");

  truth.sigma = sigma / model_norm;
  truth.omega = truth.sigma / truth.sigma.norm();

  std::vector<double> values(model.values());
  for (double& x : values) x /= model_norm;
  if (beta > 0.0) {
    std::vector<double> noise(values.size());
    for (double& x : noise) x = rng.uniform_pm1();
    double noise_norm = Eigen::Map<const Vector>(noise.data(), static_cast<Index>(noise.size())).norm();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += beta * noise[k] / noise_norm;
  }
  return {DenseTensor::from_data(dims, std::move(values)), std::move(truth)};
}

double rel_err(const FactorSet& truth, const FactorSet& recovered) {
  const Index d = truth.order();
  if (recovered.order() != d || recovered.R != truth.R || recovered.t != truth.t)
    throw Error(Errc::ShapeMismatch, "factor sets are not comparable");
  for (Index j = 0; j < d; ++j)
    if (truth.U[static_cast<std::size_t>(j)].rows() !=
        recovered.U[static_cast<std::size_t>(j)].rows())
      throw Error(Errc::ShapeMismatch, "factor sets are not comparable");

  const int r = truth.R;
  // Column-separable cost: matching true column i with recovered column p
  // costs sum_j min over signs of the squared distance.
  Matrix cost = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    for (int p = 0; p < r; ++p) {
      double c = 0.0;
      for (Index j = 0; j < d; ++j) {
        const Matrix& a = truth.U[static_cast<std::size_t>(j)];
        const Matrix& b = recovered.U[static_cast<std::size_t>(j)];
        c += a.col(i).squaredNorm() + b.col(p).squaredNorm() -
             2.0 * std::abs(a.col(i).dot(b.col(p)));
      }
      cost(i, p) = c;
    }
  }
  std::vector<int> row_of_col = solve_assignment(cost);
  double total = 0.0;
  for (int p = 0; p < r; ++p) total += cost(row_of_col[static_cast<std::size_t>(p)], p);
  total = std::max(total, 0.0);

  double denom_sq = 0.0;
  for (const Matrix& u : truth.U) denom_sq += u.squaredNorm();
  return std::sqrt(total) / std::sqrt(denom_sq);
}

int kruskal_rank(const Matrix& m) {
  const int cols = static_cast<int>(m.cols());
  if (cols > 12) throw Error(Errc::TooManyColumns, "Kruskal rank limited to 12 columns");
  const int kmax = static_cast<int>(std::min<Index>(m.rows(), m.cols()));

  std::vector<int> subset;
  // True iff every k-subset of columns has full numerical rank.
  auto all_independent = [&](int k) {
    subset.assign(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
    while (true) {
      Matrix sub(m.rows(), k);
      for (int i = 0; i < k; ++i) sub.col(i) = m.col(subset[static_cast<std::size_t>(i)]);
      Eigen::JacobiSVD<Matrix> svd(sub);
      double top = svd.singularValues()(0);
      double bottom = svd.singularValues()(k - 1);
      if (!(bottom > 1e-10 * top)) return false;
      int i = k - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] == cols - k + i) --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (int l = i + 1; l < k; ++l)
        subset[static_cast<std::size_t>(l)] = subset[static_cast<std::size_t>(l - 1)] + 1;
    }
    return true;
  };

  for (int k = kmax; k >= 1; --k)
    if (all_independent(k)) return k;
  return 0;
}

UniquenessVerdict uniqueness_check(const FactorSet& f) {
  const int d = static_cast<int>(f.order());
  const int free = d - f.t;
  if (f.R < 2) return {false, "R >= 2 required by the uniqueness condition's premise"};
  for (int i = 0; i < f.R; ++i)
    if (f.sigma.size() == f.R && f.sigma(i) == 0.0)
      return {false, "zero weight violates the uniqueness condition's premise"};

  if (f.t >= 3) return {true, "three or more orthonormal factor matrices with R >= 2"};

  std::vector<int> kranks;
  kranks.reserve(static_cast<std::size_t>(free));
  for (int j = 0; j < free; ++j) kranks.push_back(kruskal_rank(f.U[static_cast<std::size_t>(j)]));

  if (f.t == 1) {
    int sum = 0;
    for (int k : kranks) sum += k;
    std::ostringstream os;
    if (sum >= f.R + d - 1) {
      os << "free-mode Kruskal ranks sum to " << sum << " >= R + d - 1 = " << f.R + d - 1;
      return {true, os.str()};
    }
    os << "free-mode Kruskal ranks sum to " << sum << " < R + d - 1 = " << f.R + d - 1;
    return {false, os.str()};
  }
  // t == 2: one free mode with Kruskal rank >= 2 suffices.
  for (std::size_t j = 0; j < kranks.size(); ++j) {
    if (kranks[j] >= 2) {
      std::ostringstream os;
      os << "mode " << j + 1 << " has Kruskal rank " << kranks[j] << " >= 2 with t = 2";
      return {true, os.str()};
    }
  }
  return {false, "no free mode has Kruskal rank >= 2 with t = 2"};
}

InstanceResult run_instance(const ExperimentSpec& spec, int index) {
  InstanceResult res;
  res.seed = spec.seed_base + static_cast<std::uint64_t>(index);
  try {
    auto [tensor, truth] = gen_synthetic(spec.dims, spec.R, spec.t, spec.beta, res.seed);
    SolverConfig config;
    config.eps1 = spec.eps1;
    config.eps2 = spec.eps2;

    auto start = std::chrono::steady_clock::now();
    FactorSet start_point = spec.init == InitKind::Procedure
                                ? get_initializer(tensor, spec.R, spec.t)
                                : random_init(tensor, spec.R, spec.t, res.seed ^ kInitSeedSalt);
    SolveResult solved = run(tensor, spec.R, spec.t, config, start_point);
    auto stop = std::chrono::steady_clock::now();

    res.seconds = std::chrono::duration<double>(stop - start).count();
    res.iterations = solved.trace.iterations();
    res.status = solved.trace.status;
    res.rel_err = rel_err(truth, solved.factors);
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

int experiment_threads() {
  const char* env = std::getenv("OTAP_THREADS");
  if (env != nullptr) {
    long v = std::strtol(env, nullptr, 10);
    return v <= 0 ? 1 : static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ResultRow run_experiment(const ExperimentSpec& spec) {
  if (spec.n_instances < 1) throw Error(Errc::ShapeMismatch, "need at least one instance");
  ResultRow row;
  row.spec = spec;
  row.instances.resize(static_cast<std::size_t>(spec.n_instances));

  const int workers = std::min(experiment_threads(), spec.n_instances);
  std::atomic<int> next{0};
  auto drain = [&]() {
    for (int i = next.fetch_add(1); i < spec.n_instances; i = next.fetch_add(1))
      row.instances[static_cast<std::size_t>(i)] = run_instance(spec, i);
  };
  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (std::thread& th : pool) th.join();
  }

  std::vector<double> iters;
  double sum_iter = 0.0, sum_time = 0.0, sum_err = 0.0;
  int ok = 0;
  for (const InstanceResult& r : row.instances) {
    if (r.failed) {
      std::fprintf(stderr, "instance seed %llu failed: %s\n",
                   static_cast<unsigned long long>(r.seed), r.error.c_str());
      continue;
    }
    ++ok;
    iters.push_back(static_cast<double>(r.iterations));
    sum_iter += r.iterations;
    sum_time += r.seconds;
    sum_err += r.rel_err;
    switch (r.status) {
      case SolveStatus::Converged: ++row.n_converged; break;
      case SolveStatus::MaxIter: ++row.n_maxiter; break;
      case SolveStatus::Degenerate: ++row.n_degenerate; break;
    }
  }
  if (ok > 0) {
    row.mean_iter = sum_iter / ok;
    row.mean_time_s = sum_time / ok;
    row.mean_rel_err = sum_err / ok;
    std::sort(iters.begin(), iters.end());
    row.median_iter = ok % 2 == 1 ? iters[static_cast<std::size_t>(ok / 2)]
                                  : 0.5 * (iters[static_cast<std::size_t>(ok / 2 - 1)] +
                                           iters[static_cast<std::size_t>(ok / 2)]);
  }
  return row;
}

double init_ratio_experiment(const std::vector<Index>& dims, int r, int t, int n_instances,
                             std::uint64_t seed, EntryDist dist) {
  if (n_instances < 1) throw Error(Errc::ShapeMismatch, "need at least one instance");
  double sum = 0.0;
  for (int inst = 0; inst < n_instances; ++inst) {
    std::uint64_t inst_seed = seed + static_cast<std::uint64_t>(inst);
    Rng rng(inst_seed);
    DenseTensor a = DenseTensor::zeros(dims);
    for (Index k = 0; k < a.size(); ++k)
      a.data()[k] = dist == EntryDist::Normal ? rng.normal() : rng.uniform_pm1();

    FactorSet proc = get_initializer(a, r, t);
    FactorSet rnd = random_init(a, r, t, inst_seed ^ kInitSeedSalt);
    sum += objective_G(a, proc) / objective_G(a, rnd);
  }
  return sum / n_instances;
}

namespace {

std::string dims_to_string(const std::vector<Index>& dims) {
  std::ostringstream os;
  for (std::size_t j = 0; j < dims.size(); ++j) os << (j ? "x" : "") << dims[j];
  return os.str();
}

}  // namespace

std::string result_csv_header() {
  return "t,dims,R,eps1,eps2,init,instances,mean_iter,median_iter,mean_time_s,mean_rel_err,"
         "n_converged,n_maxiter,n_degenerate";
}

std::string format_result_csv_row(const ResultRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.10g,%.10g,%s,%d,%.10g,%.10g,%.10g,%.10g,%d,%d,%d",
                row.spec.t, dims_to_string(row.spec.dims).c_str(), row.spec.R, row.spec.eps1,
                row.spec.eps2, row.spec.init == InitKind::Procedure ? "procedure" : "random",
                row.spec.n_instances, row.mean_iter, row.median_iter, row.mean_time_s,
                row.mean_rel_err, row.n_converged, row.n_maxiter, row.n_degenerate);
  return buf;
}

void append_result_csv(const std::string& path, const ResultRow& row) {
  bool need_header = true;
  {
    std::ifstream probe(path);
    need_header = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
  }
  std::ofstream os(path, std::ios::app);
  if (!os) throw Error(Errc::IoError, "cannot open '" + path + "' for appending");
  if (need_header) os << result_csv_header() << "\n";
  os << format_result_csv_row(row) << "\n";
  if (!os) throw Error(Errc::IoError, "write to '" + path + "' failed");

  nlohmann::json manifest;
  manifest["dims"] = dims_to_string(row.spec.dims);
  manifest["R"] = row.spec.R;
  manifest["t"] = row.spec.t;
  manifest["beta"] = row.spec.beta;
  manifest["eps1"] = row.spec.eps1;
  manifest["eps2"] = row.spec.eps2;
  manifest["init"] = row.spec.init == InitKind::Procedure ? "procedure" : "random";
  manifest["seed_base"] = row.spec.seed_base;
  std::vector<std::uint64_t> seeds;
  seeds.reserve(row.instances.size());
  for (const InstanceResult& r : row.instances) seeds.push_back(r.seed);
  manifest["seeds"] = seeds;
  std::ofstream ms(path + ".manifest.jsonl", std::ios::app);
  if (ms) ms << manifest.dump() << "\n";
}

}  // namespace otap
