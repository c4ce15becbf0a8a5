// snmdp: generate, solve and benchmark discounted MDPs.
//
// Exit codes: 0 success, 2 usage error, 3 data error (I/O, parse,
// validation), 4 solver did not converge.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snmdp/commands.hpp"

namespace cli = snmdp::cli;

int main(int argc, char** argv) {
  CLI::App app{"Semismooth Newton-type solvers for discounted MDPs (PI, VI, alpha-VI)"};
  app.require_subcommand(1);

  cli::GenOptions gen;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen", "Write a random dense instance (uniform [0,1) sampling)");
  gen_cmd->add_option("n", gen.n, "Number of states")->required();
  gen_cmd->add_option("m", gen.m, "Number of actions")->required();
  gen_cmd->add_option("gamma", gen.gamma, "Discount factor in (0,1)")->required();
  auto* seed_opt = gen_cmd->add_option("seed", gen_seed, std::string("Seed (default: $") + cli::kSeedEnvVar + " or 0)");
  gen_cmd->add_option("out", gen.out_path, "Output path (default: stdout)");

  cli::SolveOptions solve;
  double solve_alpha = 0.0;
  std::size_t solve_max_iters = 0;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance with pi, vi or alpha-vi");
  solve_cmd->add_option("mdp", solve.mdp_path, "MDP file")->required();
  solve_cmd->add_option("method", solve.method, "pi | vi | alpha-vi")->required();
  auto* alpha_opt = solve_cmd->add_option("--alpha", solve_alpha, "alpha for alpha-vi");
  solve_cmd->add_option("--tol", solve.tol, "Residual sup-norm tolerance")->capture_default_str();
  solve_cmd->add_flag("--relative-tol", solve.relative_tol, "Scale tol by 1 + ||theta||");
  auto* iters_opt = solve_cmd->add_option("--max-iters", solve_max_iters, "Iteration cap (default 10000 pi, 100000 vi)");
  solve_cmd->add_flag("--force", solve.force, "Allow alpha <= (1+gamma)/2");
  solve_cmd->add_option("--trace-out", solve.trace_out, "Write per-iteration trace CSV");
  solve_cmd->add_flag("--timing", solve.timing, "Report wall-clock times");

  cli::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "alpha-VI iteration counts and rates over an alpha grid");
  sweep_cmd->alias("sweep-alpha");
  sweep_cmd->add_option("mdp", sweep.mdp_path, "MDP file")->required();
  sweep_cmd->add_option("--alpha-min", sweep.alpha_min)->capture_default_str();
  sweep_cmd->add_option("--alpha-max", sweep.alpha_max)->capture_default_str();
  sweep_cmd->add_option("--steps", sweep.steps)->capture_default_str();
  sweep_cmd->add_option("--tol", sweep.tol)->capture_default_str();
  sweep_cmd->add_option("--max-iters", sweep.max_iters)->capture_default_str();
  sweep_cmd->add_option("--tail-fraction", sweep.tail_fraction, "Tail share used for the empirical rate")
      ->capture_default_str();
  sweep_cmd->add_option("-o,--out", sweep.out_csv, "Output CSV (default: stdout)");

  cli::BenchmarkOptions bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Error-vs-iteration curves for runs listed in a spec file");
  bench_cmd->add_option("spec", bench.spec_path, "Benchmark spec (JSON)")->required();
  bench_cmd->add_option("-o,--out", bench.out_csv, "Output CSV (default: stdout)");
  bench_cmd->add_flag("--timing", bench.timing, "Fill the wall_time_us column");

  cli::GraphOptions graph;
  auto* graph_cmd = app.add_subcommand("graph", "Sample T and T_alpha of a single-state MDP");
  graph_cmd->add_option("mdp", graph.mdp_path, "MDP file with n = 1")->required();
  graph_cmd->add_option("--theta-min", graph.theta_min)->capture_default_str();
  graph_cmd->add_option("--theta-max", graph.theta_max)->capture_default_str();
  graph_cmd->add_option("--samples", graph.samples)->capture_default_str();
  graph_cmd->add_option("--alpha", graph.alphas, "Also sample T_alpha (repeatable)");
  graph_cmd->add_option("-o,--out", graph.out_csv, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  if (*gen_cmd) {
    if (*seed_opt) gen.seed = gen_seed;
    return cli::cmd_gen(gen, std::cout, std::cerr);
  }
  if (*solve_cmd) {
    if (*alpha_opt) solve.alpha = solve_alpha;
    if (*iters_opt) solve.max_iters = solve_max_iters;
    return cli::cmd_solve(solve, std::cout, std::cerr);
  }
  if (*sweep_cmd) return cli::cmd_sweep_alpha(sweep, std::cout, std::cerr);
  if (*bench_cmd) return cli::cmd_benchmark(bench, std::cout, std::cerr);
  if (*graph_cmd) return cli::cmd_graph(graph, std::cout, std::cerr);
  return cli::kExitUsage;
}
