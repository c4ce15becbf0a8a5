#pragma once

// Command implementations behind the snmdp executable. Each command takes
// its options as a struct plus output/error streams and returns a process
// exit code, so the same code paths are exercised by the tests.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "snmdp/bellman.hpp"
#include "snmdp/csv.hpp"
#include "snmdp/diagnostics.hpp"
#include "snmdp/mdp.hpp"
#include "snmdp/mdp_io.hpp"
#include "snmdp/newton.hpp"

namespace snmdp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNotConverged = 4,
};

/// Name of the environment variable that supplies the default instance seed.
inline constexpr const char* kSeedEnvVar = "SNMDP_SEED";

/// Tolerance of the policy-iteration run used as reference V* for error columns.
inline constexpr double kReferenceTol = 1e-12;

/// Thrown for bad command-line parameters; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string hex64(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv(kSeedEnvVar);
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    auto s = std::stoull(v, &used, 10);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw UsageError(std::string(kSeedEnvVar) + " is not an unsigned integer: " + v);
  }
}

// Runs a command body and maps the library's exceptions onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "validation error:\n";
    for (const auto& v : e.violations()) err << "  " << v << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

inline CostVector reference_solution(const Mdp& mdp) {
  SolverConfig c = default_policy_iteration_config();
  c.tol = kReferenceTol;
  return policy_iteration(mdp, c).theta;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw UsageError("steps must be positive");
  if (steps == 1) return {lo};
  std::vector<double> out(steps);
  const double span = static_cast<double>(steps - 1);
  // Convex-combination form keeps the end points (and e.g. 1.0 in [0.5,1.2]) exact.
  for (std::size_t i = 0; i < steps; ++i)
    out[i] = (lo * static_cast<double>(steps - 1 - i) + hi * static_cast<double>(i)) / span;
  return out;
}

inline std::string theta_text(std::span<const double> theta) {
  std::string out = "[";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i) out += ',';
    out += snmdp::detail::format_double(theta[i]);
  }
  return out + "]";
}

}  // namespace detail

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::size_t n = 0;
  std::size_t m = 0;
  double gamma = 0.0;
  std::optional<std::uint64_t> seed;  ///< falls back to $SNMDP_SEED, then 0
  std::string out_path;               ///< empty writes the document to `out`
};

/// Writes a random instance and prints its digest line.
inline int cmd_gen(const GenOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (opt.n == 0) throw UsageError("n must be at least 1");
    if (opt.m == 0) throw UsageError("m must be at least 1");
    if (!(opt.gamma > 0.0 && opt.gamma < 1.0)) throw UsageError("gamma must lie in (0,1)");
    const std::uint64_t seed = opt.seed ? *opt.seed : detail::seed_from_env().value_or(0);

    const Mdp mdp = random_mdp(opt.n, opt.m, opt.gamma, seed);
    const std::string doc = save_mdp(mdp);
    const std::string digest = "n=" + std::to_string(opt.n) + " m=" + std::to_string(opt.m) +
                               " gamma=" + snmdp::detail::format_double(opt.gamma) + " seed=" + std::to_string(seed) +
                               " fnv1a64=" + detail::hex64(fnv1a64(doc));
    if (opt.out_path.empty()) {
      out << doc;
      err << digest << '\n';
    } else {
      auto file = detail::open_output(opt.out_path);
      file << doc;
      if (!file) throw std::runtime_error("write failed: " + opt.out_path);
      out << digest << '\n';
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------- solve

enum class Method { pi, vi, alpha_vi };

inline Method parse_method(const std::string& s) {
  if (s == "pi") return Method::pi;
  if (s == "vi") return Method::vi;
  if (s == "alpha-vi") return Method::alpha_vi;
  throw UsageError("unknown method '" + s + "' (expected pi, vi or alpha-vi)");
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::pi: return "pi";
    case Method::vi: return "vi";
    case Method::alpha_vi: return "alpha-vi";
  }
  return "?";
}

struct SolveOptions {
  std::string mdp_path;
  std::string method = "pi";
  std::optional<double> alpha;
  double tol = 1e-10;
  bool relative_tol = false;
  std::optional<std::size_t> max_iters;  ///< per-method default when unset
  bool force = false;
  std::string trace_out;
  bool timing = false;  ///< wall-clock fields are left empty unless set
};

/// Runs one solver; exit code 4 when it does not converge.
inline int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Method method = parse_method(opt.method);
    if (method == Method::alpha_vi && !opt.alpha) throw UsageError("--alpha is required for alpha-vi");
    if (method != Method::alpha_vi && opt.alpha) throw UsageError("--alpha only applies to alpha-vi");
    if (!(opt.tol >= 0.0)) throw UsageError("tol must be nonnegative");
    if (opt.max_iters && *opt.max_iters == 0) throw UsageError("max-iters must be positive");

    const Mdp mdp = load_mdp_file(opt.mdp_path);
    if (method == Method::alpha_vi) {
      if (*opt.alpha == 0.0) throw UsageError("alpha must be nonzero");
      if (!opt.force && !(*opt.alpha > alpha_threshold(mdp.gamma())))
        throw UsageError("alpha = " + snmdp::detail::format_double(*opt.alpha) + " is not above (1+gamma)/2 = " +
                         snmdp::detail::format_double(alpha_threshold(mdp.gamma())) + "; use --force to run anyway");
    }

    SolverConfig config;
    config.tol = opt.tol;
    config.relative_tol = opt.relative_tol;
    config.max_iters = opt.max_iters.value_or(method == Method::pi ? kDefaultMaxItersPolicyIteration
                                                                    : kDefaultMaxItersValueIteration);
    config.record_trace = !opt.trace_out.empty();
    if (config.record_trace) config.reference_solution = detail::reference_solution(mdp);

    const CostVector zero(mdp.num_states(), 0.0);
    SolveResult result;
    BStrategy strategy;
    switch (method) {
      case Method::pi:
        result = policy_iteration(mdp, config);
        strategy = GeneralizedJacobianStrategy{};
        break;
      case Method::vi:
        result = value_iteration(mdp, zero, config);
        strategy = IdentityStrategy{};
        break;
      case Method::alpha_vi:
        result = alpha_value_iteration(mdp, *opt.alpha, zero, config, opt.force);
        strategy = ScaledIdentityStrategy{*opt.alpha};
        break;
    }

    if (result.trace) {
      annotate_kappa(mdp, *result.trace, strategy);
      auto file = detail::open_output(opt.trace_out);
      CsvWriter csv(file, {"k", "residual_inf", "error_inf", "kappa_k", "wall_time_us"});
      for (std::size_t k = 0; k < result.trace->size(); ++k) {
        const auto& e = (*result.trace)[k];
        csv.row({CsvWriter::integer(k), CsvWriter::number(e.residual_inf), CsvWriter::number(e.error_inf),
                 CsvWriter::number(e.kappa), opt.timing ? CsvWriter::number(e.wall_time_us) : ""});
      }
      if (!file) throw std::runtime_error("write failed: " + opt.trace_out);
    }

    out << "method=" << method_name(method);
    if (opt.alpha) out << " alpha=" << snmdp::detail::format_double(*opt.alpha);
    out << " converged=" << (result.converged ? "true" : "false") << " status=" << to_string(result.status)
        << " iterations=" << result.iterations << " residual_inf=" << snmdp::detail::format_double(result.residual_inf);
    if (opt.timing && result.trace && !result.trace->empty())
      out << " wall_time_us=" << snmdp::detail::format_double(result.trace->back().wall_time_us);
    out << '\n';
    if (mdp.num_states() <= 16) {
      out << "theta=" << detail::theta_text(result.theta) << '\n';
      out << "policy=" << to_string(result.policy) << '\n';
    }
    return result.converged ? kExitOk : kExitNotConverged;
  });
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::string mdp_path;
  double alpha_min = 0.5;
  double alpha_max = 1.2;
  std::size_t steps = 15;
  double tol = 1e-10;
  std::size_t max_iters = 1000;
  double tail_fraction = 0.5;
  std::string out_csv;  ///< empty writes to `out`
};

struct SweepRow {
  std::optional<double> alpha;  ///< empty for the policy-iteration baseline
  bool converged = false;
  std::size_t iterations = 0;
  std::optional<double> empirical_rate;
};

/// alpha-VI from theta_0 = 0 at each grid point (forced, divergence guard on), PI baseline first.
inline std::vector<SweepRow> run_sweep(const Mdp& mdp, const std::vector<double>& alphas, double tol,
                                       std::size_t max_iters, double tail_fraction) {
  const CostVector reference = detail::reference_solution(mdp);
  SolverConfig config;
  config.tol = tol;
  config.max_iters = max_iters;
  config.record_trace = true;
  config.reference_solution = reference;

  auto rate_of = [&](const SolveResult& r) -> std::optional<double> {
    try {
      return empirical_rate(*r.trace, reference, tail_fraction);
    } catch (const InsufficientDataError&) {
      return std::nullopt;
    }
  };

  std::vector<SweepRow> rows;
  {
    SolverConfig pi_config = config;
    pi_config.max_iters = kDefaultMaxItersPolicyIteration;
    auto r = policy_iteration(mdp, pi_config);
    rows.push_back({std::nullopt, r.converged, r.iterations, rate_of(r)});
  }
  for (double alpha : alphas) {
    auto r = alpha_value_iteration(mdp, alpha, CostVector(mdp.num_states(), 0.0), config, true);
    rows.push_back({alpha, r.converged, r.iterations, rate_of(r)});
  }
  return rows;
}

inline int cmd_sweep_alpha(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!(opt.alpha_min <= opt.alpha_max)) throw UsageError("alpha-min must not exceed alpha-max");
    if (opt.alpha_min <= 0.0 && opt.alpha_max >= 0.0) throw UsageError("alpha range must exclude 0");
    if (opt.max_iters == 0) throw UsageError("max-iters must be positive");
    const auto alphas = detail::linspace(opt.alpha_min, opt.alpha_max, opt.steps);
    const Mdp mdp = load_mdp_file(opt.mdp_path);
    const auto rows = run_sweep(mdp, alphas, opt.tol, opt.max_iters, opt.tail_fraction);

    std::optional<std::ofstream> file;
    if (!opt.out_csv.empty()) file.emplace(detail::open_output(opt.out_csv));
    std::ostream& sink = file ? static_cast<std::ostream&>(*file) : out;
    CsvWriter csv(sink, {"alpha", "converged", "iterations", "empirical_rate"});
    for (const auto& r : rows)
      csv.row({CsvWriter::number(r.alpha), CsvWriter::boolean(r.converged), CsvWriter::integer(r.iterations),
               CsvWriter::number(r.empirical_rate)});
    if (!sink) throw std::runtime_error("write failed: " + opt.out_csv);
    return kExitOk;
  });
}

// ---------------------------------------------------------------- benchmark

// Benchmark spec (JSON):
//   {
//     "instance": {"n": 500, "m": 10, "gamma": 0.4, "seed": 42}   or   "mdp": "<path>",
//     "tol": 1e-10,               optional, default 1e-10
//     "max_iters": 1000,          optional, default 1000 (VI family) / 10000 (PI)
//     "runs": [{"method": "pi"}, {"method": "vi"}, {"method": "alpha-vi", "alpha": 0.8}, ...]
//   }
// A relative "mdp" path is resolved against the spec file's directory.

struct BenchmarkRun {
  Method method = Method::pi;
  std::optional<double> alpha;
};

struct BenchmarkSpec {
  std::optional<Mdp> mdp;
  double tol = 1e-10;
  std::size_t max_iters = 1000;
  std::vector<BenchmarkRun> runs;
};

inline BenchmarkSpec parse_benchmark_spec(std::string_view text, const std::string& base_dir) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("benchmark spec: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("benchmark spec: top-level value must be an object");
  BenchmarkSpec spec;
  if (auto it = doc.find("instance"); it != doc.end()) {
    const std::size_t n = snmdp::detail::read_index(*it, "n", "instance");
    const std::size_t m = snmdp::detail::read_index(*it, "m", "instance");
    const double gamma = snmdp::detail::read_number(*it, "gamma", "instance");
    const std::uint64_t seed = snmdp::detail::read_index(*it, "seed", "instance");
    if (n == 0 || m == 0 || !(gamma > 0.0 && gamma < 1.0))
      throw ParseError("benchmark spec: instance needs n, m >= 1 and gamma in (0,1)");
    spec.mdp = random_mdp(n, m, gamma, seed);
  } else if (auto p = doc.find("mdp"); p != doc.end()) {
    if (!p->is_string()) throw ParseError("benchmark spec: field \"mdp\" must be a string");
    std::string path = p->get<std::string>();
    if (!path.empty() && path.front() != '/' && !base_dir.empty()) path = base_dir + "/" + path;
    spec.mdp = load_mdp_file(path);
  } else {
    throw ParseError("benchmark spec: missing required field \"instance\" or \"mdp\"");
  }
  if (doc.contains("tol")) spec.tol = snmdp::detail::read_number(doc, "tol", "");
  if (doc.contains("max_iters")) spec.max_iters = snmdp::detail::read_index(doc, "max_iters", "");
  const json& runs = snmdp::detail::read_array(doc, "runs", "");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string where = "runs[" + std::to_string(i) + "]";
    const json& name = snmdp::detail::require(runs[i], "method", where);
    if (!name.is_string()) throw ParseError("field \"" + where + ".method\" must be a string");
    BenchmarkRun run;
    try {
      run.method = parse_method(name.get<std::string>());
    } catch (const UsageError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (runs[i].contains("alpha")) run.alpha = snmdp::detail::read_number(runs[i], "alpha", where);
    if (run.method == Method::alpha_vi && !run.alpha) throw ParseError(where + ": alpha-vi needs \"alpha\"");
    spec.runs.push_back(run);
  }
  return spec;
}

struct BenchmarkOptions {
  std::string spec_path;
  std::string out_csv;  ///< empty writes to `out`
  bool timing = false;
};

/// Long-format error-vs-iteration curves for every run in the spec, in spec order.
inline void run_benchmark(const BenchmarkSpec& spec, std::ostream& sink, std::ostream& err, bool timing) {
  const Mdp& mdp = *spec.mdp;
  const CostVector reference = detail::reference_solution(mdp);
  const CostVector zero(mdp.num_states(), 0.0);
  CsvWriter csv(sink, {"method", "alpha", "k", "residual_inf", "error_inf", "wall_time_us", "status"});

  for (const auto& run : spec.runs) {
    const std::string name = method_name(run.method);
    const std::string alpha_text = CsvWriter::number(run.alpha);
    try {
      SolverConfig config;
      config.tol = spec.tol;
      config.max_iters = spec.max_iters;
      config.record_trace = true;
      config.reference_solution = reference;
      SolveResult r;
      std::size_t k_offset = 0;
      switch (run.method) {
        case Method::pi: {
          config.max_iters = std::max<std::size_t>(spec.max_iters, kDefaultMaxItersPolicyIteration);
          r = policy_iteration(mdp, config);
          // Row k = 0 is the starting point theta_0 = 0 whose greedy policy seeds PI,
          // so that PI's evaluated costs line up with the other methods' iterates.
          csv.row({name, alpha_text, "0", CsvWriter::number(norm_inf(residual(mdp, zero))),
                   CsvWriter::number(distance_inf(zero, reference)), timing ? "0" : "", to_string(r.status)});
          k_offset = 1;
          break;
        }
        case Method::vi:
          r = value_iteration(mdp, zero, config);
          break;
        case Method::alpha_vi:
          r = alpha_value_iteration(mdp, *run.alpha, zero, config, true);
          break;
      }
      for (std::size_t k = 0; k < r.trace->size(); ++k) {
        const auto& e = (*r.trace)[k];
        csv.row({name, alpha_text, CsvWriter::integer(k + k_offset), CsvWriter::number(e.residual_inf),
                 CsvWriter::number(e.error_inf), timing ? CsvWriter::number(e.wall_time_us) : "",
                 to_string(r.status)});
      }
    } catch (const std::exception& e) {
      err << "run " << name << (run.alpha ? " alpha=" + alpha_text : "") << " failed: " << e.what() << '\n';
      csv.row({name, alpha_text, "", "", "", "", "error"});
    }
  }
}

inline int cmd_benchmark(const BenchmarkOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    std::ifstream in(opt.spec_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + opt.spec_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto slash = opt.spec_path.find_last_of('/');
    const std::string base = slash == std::string::npos ? "" : opt.spec_path.substr(0, slash);
    const BenchmarkSpec spec = parse_benchmark_spec(buf.str(), base);

    std::optional<std::ofstream> file;
    if (!opt.out_csv.empty()) file.emplace(detail::open_output(opt.out_csv));
    std::ostream& sink = file ? static_cast<std::ostream&>(*file) : out;
    run_benchmark(spec, sink, err, opt.timing);
    if (!sink) throw std::runtime_error("write failed: " + opt.out_csv);
    return kExitOk;
  });
}

// ---------------------------------------------------------------- graph

struct GraphOptions {
  std::string mdp_path;
  double theta_min = 0.0;
  double theta_max = 1.0;
  std::size_t samples = 101;
  std::vector<double> alphas;
  std::string out_csv;  ///< empty writes to `out`
};

/**
 * Samples of the scalar maps theta -> T theta (and T_alpha theta for each
 * requested alpha) on a uniform grid, followed by one fixed_point row at the
 * PI solution, where every map returns its argument.
 */
inline void write_graph(const Mdp& mdp, const std::vector<double>& grid, const std::vector<double>& alphas,
                        std::ostream& sink) {
  if (mdp.num_states() != 1) throw UsageError("graph needs a single-state MDP (n = 1)");
  for (double a : alphas)
    if (a == 0.0) throw UsageError("alpha must be nonzero");
  std::vector<std::string> header{"kind", "theta", "T_theta"};
  for (double a : alphas) header.push_back("T_alpha_" + CsvWriter::number(a));
  CsvWriter csv(sink, header);

  auto emit = [&](const char* kind, double theta) {
    const CostVector v{theta};
    std::vector<std::string> row{kind, CsvWriter::number(theta), CsvWriter::number(apply_bellman(mdp, v)[0])};
    for (double a : alphas) row.push_back(CsvWriter::number(apply_t_alpha(mdp, a, v)[0]));
    csv.row(row);
  };
  for (double theta : grid) emit("sample", theta);
  emit("fixed_point", policy_iteration(mdp, default_policy_iteration_config()).theta[0]);
}

inline int cmd_graph(const GraphOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!(opt.theta_min <= opt.theta_max)) throw UsageError("theta-min must not exceed theta-max");
    const auto grid = detail::linspace(opt.theta_min, opt.theta_max, opt.samples);
    const Mdp mdp = load_mdp_file(opt.mdp_path);
    std::optional<std::ofstream> file;
    if (!opt.out_csv.empty()) file.emplace(detail::open_output(opt.out_csv));
    std::ostream& sink = file ? static_cast<std::ostream&>(*file) : out;
    write_graph(mdp, grid, opt.alphas, sink);
    if (!sink) throw std::runtime_error("write failed: " + opt.out_csv);
    return kExitOk;
  });
}

}  // namespace snmdp::cli
