#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "otap/harness.hpp"
#include "otap/init.hpp"

namespace {

using namespace otap;

int status_exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::MaxIter: return 2;
    case SolveStatus::Degenerate: return 3;
  }
  return 1;
}

std::vector<Index> to_dims(const std::vector<long long>& raw) {
  std::vector<Index> dims;
  dims.reserve(raw.size());
  for (long long v : raw) {
    if (v < 1) throw Error(Errc::ShapeMismatch, "extents must be positive");
    dims.push_back(static_cast<Index>(v));
  }
  return dims;
}

struct DecomposeArgs {
  std::string input;
  int rank = 0;
  int t = 0;
  double eps1 = 1e-8, eps2 = 1e-8, tol = 1e-4;
  int max_iter = 2000;
  std::string init = "procedure";
  std::uint64_t seed = 0;
  bool auto_reduce = false;
  std::string out, trace;
};

int run_decompose(const DecomposeArgs& args) {
  nlohmann::json echo{{"command", "decompose"},
                      {"input", args.input},
                      {"rank", args.rank},
                      {"t", args.t},
                      {"eps1", args.eps1},
                      {"eps2", args.eps2},
                      {"tol", args.tol},
                      {"max_iter", args.max_iter},
                      {"init", args.init},
                      {"seed", args.seed},
                      {"auto_reduce_rank", args.auto_reduce},
                      {"out", args.out},
                      {"trace", args.trace}};
  std::cout << echo.dump() << "\n";

  DenseTensor a = read_tensor_file(args.input);
  SolverConfig config;
  config.eps1 = args.eps1;
  config.eps2 = args.eps2;
  config.tol = args.tol;
  config.max_iter = args.max_iter;
  config.auto_reduce_rank = args.auto_reduce;

  FactorSet start = args.init == "procedure"
                        ? get_initializer(a, args.rank, args.t)
                        : random_init(a, args.rank, args.t, args.seed);
  SolveResult solved = run(a, args.rank, args.t, config, start);

  for (const std::string& w : solved.trace.warnings) std::cerr << "warning: " << w << "\n";
  if (!args.out.empty()) save_factors_file(args.out, solved.factors);
  if (!args.trace.empty()) {
    std::ofstream os(args.trace);
    if (!os) throw Error(Errc::IoError, "cannot open '" + args.trace + "' for writing");
    solved.trace.write_csv(os);
  }

  FactorSet scratch = solved.factors;
  double g = objective_G(a, scratch);
  double h = objective_H(a, scratch);
  std::printf("G = %.10g\n", g);
  std::printf("H = %.10g\n", h);
  std::printf("kkt_total = %.6e\n", solved.trace.final_kkt());
  std::printf("status = %s\n", to_string(solved.trace.status));
  return status_exit_code(solved.trace.status);
}

struct ExperimentArgs {
  std::vector<long long> dims;
  int rank = 0, t = 0;
  double beta = 0.1, eps1 = 1e-8, eps2 = 1e-8;
  int instances = 50;
  std::uint64_t seed = 0;
  std::string init = "procedure";
  std::string out;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  nlohmann::json echo{{"command", "experiment"}, {"dims", args.dims},
                      {"rank", args.rank},       {"t", args.t},
                      {"beta", args.beta},       {"eps1", args.eps1},
                      {"eps2", args.eps2},       {"instances", args.instances},
                      {"seed", args.seed},       {"init", args.init},
                      {"out", args.out}};
  std::cout << echo.dump() << "\n";

  ExperimentSpec spec;
  spec.dims = to_dims(args.dims);
  spec.R = args.rank;
  spec.t = args.t;
  spec.beta = args.beta;
  spec.eps1 = args.eps1;
  spec.eps2 = args.eps2;
  spec.n_instances = args.instances;
  spec.seed_base = args.seed;
  spec.init = args.init == "procedure" ? InitKind::Procedure : InitKind::Random;
  if (spec.t < 1 || spec.t > static_cast<int>(spec.dims.size()))
    throw Error(Errc::InvalidMode, "t must be between 1 and the order");

  ResultRow row = run_experiment(spec);
  if (!args.out.empty()) append_result_csv(args.out, row);
  std::cout << result_csv_header() << "\n" << format_result_csv_row(row) << "\n";
  return 0;
}

struct RatioArgs {
  std::vector<long long> dims;
  int rank = 0, t = 0;
  int instances = 20;
  std::uint64_t seed = 0;
  std::string dist = "normal";
};

int run_init_ratio(const RatioArgs& args) {
  nlohmann::json echo{{"command", "init-ratio"}, {"dims", args.dims}, {"rank", args.rank},
                      {"t", args.t},             {"instances", args.instances},
                      {"seed", args.seed},       {"dist", args.dist}};
  std::cout << echo.dump() << "\n";
  double ratio =
      init_ratio_experiment(to_dims(args.dims), args.rank, args.t, args.instances, args.seed,
                            args.dist == "normal" ? EntryDist::Normal : EntryDist::Uniform);
  std::printf("mean_ratio = %.10g\n", ratio);
  return 0;
}

int run_check(const std::string& input, const std::string& factors) {
  nlohmann::json echo{{"command", "check"}, {"input", input}, {"factors", factors}};
  std::cout << echo.dump() << "\n";

  DenseTensor a = read_tensor_file(input);
  FactorSet f = load_factors_file(factors);
  if (f.order() != a.order())
    throw Error(Errc::ShapeMismatch, "factor count does not match tensor order");

  std::vector<Violation> bad = feasibility_check(f);
  if (bad.empty()) {
    std::printf("feasible: yes\n");
  } else {
    std::printf("feasible: no\n");
    for (const Violation& v : bad)
      std::printf("violation: %s (magnitude %.6e)\n", v.what.c_str(), v.magnitude);
  }

  KktReport kkt = kkt_residual(a, f);
  for (Index j = 0; j < kkt.rho.size(); ++j)
    std::printf("rho[%lld] = %.6e\n", static_cast<long long>(j + 1), kkt.rho(j));
  std::printf("kkt_total = %.6e\n", kkt.total);

  UniquenessVerdict verdict = uniqueness_check(f);
  std::printf("uniqueness: %s (%s)\n", verdict.certified ? "Unique" : "NotCertified",
              verdict.reason.c_str());
  return bad.empty() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank approximation of dense tensors with columnwise-orthonormal factors"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  CLI::App* cmd_dec = app.add_subcommand("decompose", "Decompose one tensor file");
  cmd_dec->add_option("--input", dec.input, "tensor text file")->required();
  cmd_dec->add_option("--rank", dec.rank, "number of rank-1 terms")->required();
  cmd_dec->add_option("--t", dec.t, "number of trailing orthonormal factor matrices")->required();
  cmd_dec->add_option("--eps1", dec.eps1, "free-mode shift");
  cmd_dec->add_option("--eps2", dec.eps2, "orthonormal-mode shift");
  cmd_dec->add_option("--tol", dec.tol, "relative step tolerance");
  cmd_dec->add_option("--max-iter", dec.max_iter, "iteration cap");
  cmd_dec->add_option("--init", dec.init, "initializer")
      ->check(CLI::IsMember({"procedure", "random"}));
  cmd_dec->add_option("--seed", dec.seed, "seed for --init random");
  cmd_dec->add_flag("--auto-reduce-rank", dec.auto_reduce, "drop degenerate columns and continue");
  cmd_dec->add_option("--out", dec.out, "write recovered factors (JSON)");
  cmd_dec->add_option("--trace", dec.trace, "write iteration trace (CSV)");

  ExperimentArgs exp;
  CLI::App* cmd_exp = app.add_subcommand("experiment", "Seeded batch of synthetic instances");
  cmd_exp->add_option("--dims", exp.dims, "tensor extents, comma separated")
      ->required()
      ->delimiter(',');
  cmd_exp->add_option("--rank", exp.rank)->required();
  cmd_exp->add_option("--t", exp.t)->required();
  cmd_exp->add_option("--beta", exp.beta, "noise level");
  cmd_exp->add_option("--eps1", exp.eps1);
  cmd_exp->add_option("--eps2", exp.eps2);
  cmd_exp->add_option("--instances", exp.instances);
  cmd_exp->add_option("--seed", exp.seed, "base seed; instance i uses seed+i");
  cmd_exp->add_option("--init", exp.init)->check(CLI::IsMember({"procedure", "random"}));
  cmd_exp->add_option("--out", exp.out, "CSV to append the result row to");

  RatioArgs ratio;
  CLI::App* cmd_ratio = app.add_subcommand("init-ratio", "Initializer quality ratio experiment");
  cmd_ratio->add_option("--dims", ratio.dims)->required()->delimiter(',');
  cmd_ratio->add_option("--rank", ratio.rank)->required();
  cmd_ratio->add_option("--t", ratio.t)->required();
  cmd_ratio->add_option("--instances", ratio.instances);
  cmd_ratio->add_option("--seed", ratio.seed);
  cmd_ratio->add_option("--dist", ratio.dist)->check(CLI::IsMember({"normal", "uniform"}));

  std::string check_input, check_factors;
  CLI::App* cmd_check = app.add_subcommand("check", "Feasibility/stationarity/uniqueness report");
  cmd_check->add_option("--input", check_input, "tensor text file")->required();
  cmd_check->add_option("--factors", check_factors, "factor JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_dec->parsed()) return run_decompose(dec);
    if (cmd_exp->parsed()) return run_experiment_cmd(exp);
    if (cmd_ratio->parsed()) return run_init_ratio(ratio);
    if (cmd_check->parsed()) return run_check(check_input, check_factors);
  } catch (const otap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
