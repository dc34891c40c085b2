// txflow: power flow with Tx-stepping continuation.
//
//   txflow solve   CASE [--method plain-nr|tx] [--init-mag M --init-ang A] [--out FILE]
//   txflow sweep   CASE [--grid 5x5] [--mag-range 0.6:1] [--ang-range -50:50] [--real-imag N]
//   txflow compare CASE --init 1:0 --init 0.76:23 ...
//
// Exit codes: 0 high-voltage solution, 1 parse/IO error, 2 validation or
// usage error, 3 solved but not to a high-voltage solution.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "txflow/case_io.hpp"
#include "txflow/error.hpp"
#include "txflow/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kParse = 1, kInvalid = 2, kNotHighVoltage = 3 };

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("TXFLOW_LOG");
  if (!env) return LogLevel::Info;
  const std::string v = env;
  if (v == "quiet" || v == "error" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(LogLevel at, const std::string& msg) {
  if (log_level() >= at) std::cerr << msg << '\n';
}

int fail(int code, txflow::ErrorCode kind, const std::string& message) {
  nlohmann::ordered_json err;
  err["error"] = txflow::to_string(kind);
  err["message"] = message;
  std::cerr << err.dump() << '\n';
  return code;
}

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("range", "expected a:b, got '" + s + "'");
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw txflow::Error(txflow::ErrorCode::Io, "cannot write " + path);
  out << text;
}

struct CommonOptions {
  std::string case_path;
  std::string method = "tx";
  double gamma = 999.0;
  double dv_max = 0.1;
  double tol = 1e-6;
  int max_iter = 50;
  std::string drop_gen;
  bool no_shunt_relax = false;
  std::string start;
  bool no_zeta = false;
  bool no_vlimit = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("case", case_path, "MATPOWER .m or native .json case")->required();
    cmd.add_option("--method", method, "plain-nr or tx")
        ->check(CLI::IsMember({"plain-nr", "tx"}))
        ->capture_default_str();
    cmd.add_option("--gamma", gamma, "series admittance scaling at lambda = 1")->capture_default_str();
    cmd.add_option("--dv-max", dv_max, "per-iteration voltage step limit (pu)")->capture_default_str();
    cmd.add_option("--tol", tol, "KCL residual tolerance (pu)")->capture_default_str();
    cmd.add_option("--max-iter", max_iter, "Newton iterations per stage")->capture_default_str();
    cmd.add_option("--drop-gen", drop_gen, "comma-separated generator rows (1-based) to take out of service");
    cmd.add_flag("--no-shunt-relax", no_shunt_relax, "keep line charging fixed during Tx stepping");
    cmd.add_option("--start", start, "lambda = 1 stage starts from the initial guess or the constructed trivial point")
        ->check(CLI::IsMember({"guess", "trivial"}));
    cmd.add_flag("--no-variable-limiting", no_zeta, "disable damping of generator voltage derivatives");
    cmd.add_flag("--no-voltage-limiting", no_vlimit, "disable per-iteration voltage step clamping");
  }

  // Sweeps and comparisons default to starting from the guess so that it matters.
  txflow::SolverSettings settings(bool guess_by_default) const {
    txflow::SolverSettings s;
    s.tx.honor_init = start.empty() ? guess_by_default : start == "guess";
    s.method = method == "plain-nr" ? txflow::Method::PlainNR : txflow::Method::TxStepping;
    s.nr.dv_max = dv_max;
    s.nr.tol_res = tol;
    s.nr.max_iter = max_iter;
    s.nr.variable_limiting = !no_zeta;
    s.nr.voltage_limiting = !no_vlimit;
    s.tx.homotopy.gamma = gamma;
    s.tx.homotopy.shunt_relax = !no_shunt_relax;
    return s;
  }
};

struct Loaded {
  txflow::Network network;
  int code = kOk;
};

// Parse failures map to exit 1, model validation failures to exit 2.
Loaded load(const CommonOptions& opts) {
  Loaded out;
  txflow::RawCase raw;
  try {
    raw = txflow::load_case(opts.case_path);
  } catch (const txflow::Error& e) {
    out.code = fail(kParse, e.code(), e.what());
    return out;
  }
  if (!opts.drop_gen.empty()) {
    std::stringstream ss(opts.drop_gen);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const int row = std::stoi(item);
      if (row < 1 || row > static_cast<int>(raw.gens.size())) {
        out.code = fail(kInvalid, txflow::ErrorCode::InvalidConfig, "--drop-gen row " + item + " out of range");
        return out;
      }
      raw.gens[row - 1].status = 0;
    }
  }
  try {
    std::vector<std::string> warnings;
    out.network = txflow::to_network(raw, &warnings);
    for (const auto& w : warnings) log(LogLevel::Debug, "warning: " + w);
  } catch (const txflow::Error& e) {
    out.code = fail(kInvalid, e.code(), e.what());
  }
  return out;
}

int cmd_solve(const CommonOptions& opts, std::optional<double> init_mag, std::optional<double> init_ang,
              const std::string& out, const std::string& trace,
              const std::string& stages) {
  Loaded loaded = load(opts);
  if (loaded.code != kOk) return loaded.code;
  txflow::SolverSettings settings = opts.settings(init_mag || init_ang);
  const txflow::InitialGuess guess{init_mag.value_or(1.0), init_ang.value_or(0.0)};
  txflow::SolveReport report;
  try {
    report = txflow::solve_from_guess(loaded.network, guess, settings);
  } catch (const txflow::Error& e) {
    return fail(kInvalid, e.code(), e.what());
  }
  log(LogLevel::Info, std::string(txflow::to_string(report.status)) + " after " +
                          std::to_string(report.total_iterations) + " iterations, " +
                          std::to_string(report.stages.size()) + " stage(s), max residual " +
                          std::to_string(report.max_residual));
  if (!report.message.empty()) log(LogLevel::Info, report.message);
  write_text(out, txflow::write_solution(report, report.state, loaded.network));
  if (!trace.empty()) write_text(trace, txflow::trace_csv(report.trace));
  if (!stages.empty()) write_text(stages, txflow::stage_csv(report));
  return report.status == txflow::SolveStatus::HighVoltage ? kOk : kNotHighVoltage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power flow with Tx-stepping homotopy"};
  app.require_subcommand(1);

  CommonOptions solve_opts;
  std::optional<double> init_mag;
  std::optional<double> init_ang;
  std::string solve_out;
  std::string trace_out;
  std::string stage_out;
  auto* solve = app.add_subcommand("solve", "solve one case");
  solve_opts.add_to(*solve);
  solve->add_option("--init-mag", init_mag, "flat initial magnitude for non-slack buses (pu)");
  solve->add_option("--init-ang", init_ang, "flat initial angle for non-slack buses (deg)");
  solve->add_option("--out", solve_out, "solution JSON path (default stdout)");
  solve->add_option("--trace", trace_out, "per-iteration trace CSV path");
  solve->add_option("--stage-trace", stage_out, "per-stage trace CSV path");

  CommonOptions sweep_opts;
  std::string grid = "5x5";
  std::string mag_range = "0.6:1";
  std::string ang_range = "-50:50";
  int real_imag = 0;
  int samples = 0;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "convergence sweep over initial conditions");
  sweep_opts.add_to(*sweep);
  sweep->add_option("--grid", grid, "MAGxANG cell counts")->capture_default_str();
  sweep->add_option("--mag-range", mag_range, "magnitude range a:b (pu)")->capture_default_str();
  sweep->add_option("--ang-range", ang_range, "angle range a:b (deg)")->capture_default_str();
  sweep->add_option("--real-imag", real_imag, "N points with V_R on [0.6, 1.1] and V_I = 1 - V_R");
  sweep->add_option("--samples", samples, "N random points in the magnitude/angle box (needs --seed)");
  sweep->add_option("--seed", seed, "random seed for --samples");
  sweep->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV path (default stdout)");

  CommonOptions compare_opts;
  std::vector<std::string> inits;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "plain NR vs Tx stepping per initial condition");
  compare_opts.add_to(*compare);
  compare->add_option("--init", inits, "initial condition MAG:ANG_DEG (repeatable)");
  compare->add_option("--out", compare_out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*solve) {
      return cmd_solve(solve_opts, init_mag, init_ang, solve_out, trace_out, stage_out);
    }

    if (*sweep) {
      txflow::SweepSpec spec;
      spec.solver = sweep_opts.settings(true);
      const auto x = grid.find('x');
      if (x == std::string::npos) {
        return fail(kInvalid, txflow::ErrorCode::InvalidConfig, "--grid expects MAGxANG");
      }
      spec.n_mag = std::stoi(grid.substr(0, x));
      spec.n_ang = std::stoi(grid.substr(x + 1));
      std::tie(spec.mag_lo, spec.mag_hi) = parse_range(mag_range);
      std::tie(spec.ang_lo, spec.ang_hi) = parse_range(ang_range);
      spec.real_imag_family = real_imag > 0;
      spec.family_points = real_imag;
      spec.samples = samples;
      spec.seed = seed;
      spec.jobs = jobs;
      try {
        spec.check();
      } catch (const txflow::Error& e) {
        return fail(kInvalid, e.code(), e.what());
      }
      Loaded loaded = load(sweep_opts);
      if (loaded.code != kOk) return loaded.code;
      const txflow::SweepResult result = txflow::run_sweep(loaded.network, spec);
      write_text(sweep_out, txflow::sweep_csv(result));
      log(LogLevel::Info, txflow::sweep_summary(result));
      return kOk;
    }

    if (*compare) {
      if (inits.empty()) {
        return fail(kInvalid, txflow::ErrorCode::InvalidConfig, "compare needs at least one --init MAG:ANG");
      }
      std::vector<txflow::InitialGuess> guesses;
      for (const auto& s : inits) {
        const auto [m, a] = parse_range(s);
        guesses.push_back({m, a});
      }
      Loaded loaded = load(compare_opts);
      if (loaded.code != kOk) return loaded.code;
      const txflow::SolverSettings settings = compare_opts.settings(true);
      const auto rows = txflow::run_compare(loaded.network, guesses, settings);
      std::cout << txflow::compare_table(rows);
      if (!compare_out.empty()) write_text(compare_out, txflow::compare_csv(rows));
      return kOk;
    }
  } catch (const txflow::Error& e) {
    return fail(e.code() == txflow::ErrorCode::Io ? kParse : kInvalid, e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(kInvalid, txflow::ErrorCode::InvalidConfig, e.what());
  }
  return kInvalid;
}
