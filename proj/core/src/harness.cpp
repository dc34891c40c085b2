#include "txflow/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <thread>

#include "txflow/error.hpp"

namespace txflow {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

SolveReport solve_from_guess(const Network& network, const InitialGuess& guess,
                             const SolverSettings& settings) {
  const IndexMap index(network);
  const SolutionState init = flat_state(network, index, guess.vm, guess.va_deg * kDeg);
  if (settings.method == Method::PlainNR) return solve_plain(network, init, settings.nr);
  return solve_tx_stepping(network, init, settings.nr, settings.tx);
}

void SweepSpec::check() const {
  if (real_imag_family) {
    if (family_points < 1) throw Error(ErrorCode::InvalidConfig, "family needs at least one point");
  } else if (samples > 0) {
    if (!seed) throw Error(ErrorCode::InvalidConfig, "random sampling requires an explicit seed");
  } else if (n_mag < 1 || n_ang < 1) {
    throw Error(ErrorCode::InvalidConfig, "grid counts must be >= 1");
  }
  if (mag_lo > mag_hi || ang_lo > ang_hi) throw Error(ErrorCode::InvalidConfig, "range lo > hi");
  if (jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
}

std::vector<InitialGuess> sweep_points(const SweepSpec& spec, int* rows, int* cols) {
  spec.check();
  std::vector<InitialGuess> pts;
  int r = 0;
  int c = 1;
  if (spec.real_imag_family) {
    for (double vr : linspace(0.6, 1.1, spec.family_points)) {
      const double vi = 1.0 - vr;
      pts.push_back({std::hypot(vr, vi), std::atan2(vi, vr) / kDeg});
    }
    r = spec.family_points;
  } else if (spec.samples > 0) {
    std::mt19937_64 rng(*spec.seed);
    std::uniform_real_distribution<double> mag(spec.mag_lo, spec.mag_hi);
    std::uniform_real_distribution<double> ang(spec.ang_lo, spec.ang_hi);
    for (int i = 0; i < spec.samples; ++i) {
      const double m = mag(rng);
      pts.push_back({m, ang(rng)});
    }
    r = spec.samples;
  } else {
    for (double m : linspace(spec.mag_lo, spec.mag_hi, spec.n_mag)) {
      for (double a : linspace(spec.ang_lo, spec.ang_hi, spec.n_ang)) pts.push_back({m, a});
    }
    r = spec.n_mag;
    c = spec.n_ang;
  }
  if (rows) *rows = r;
  if (cols) *cols = c;
  return pts;
}

SweepResult run_sweep(const Network& network, const SweepSpec& spec) {
  int rows = 0;
  int cols = 0;
  const std::vector<InitialGuess> pts = sweep_points(spec, &rows, &cols);
  SweepResult result;
  result.cells.resize(pts.size());

  const IndexMap index(network);
  auto run_cell = [&](std::size_t k) {
    SweepCell& cell = result.cells[k];
    cell.row = static_cast<int>(k) / cols;
    cell.col = static_cast<int>(k) % cols;
    cell.guess = pts[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      SolveReport rep = solve_from_guess(network, pts[k], spec.solver);
      cell.status = rep.status;
      cell.iterations = rep.total_iterations;
      cell.max_residual = rep.max_residual;
      if (spec.keep_voltages) {
        cell.voltages.resize(network.buses.size());
        for (std::size_t b = 0; b < network.buses.size(); ++b) {
          cell.voltages[b] = {rep.state.x[index.vr(b)], rep.state.x[index.vi(b)]};
        }
        cell.trace = std::move(rep.trace);
      }
    } catch (const Error&) {
      cell.status = SolveStatus::Diverged;
    }
    cell.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  const int jobs = std::min<int>(spec.jobs, static_cast<int>(pts.size()));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < pts.size(); ++k) run_cell(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (int j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < pts.size(); k = next++) run_cell(k);
      });
    }
  }
  for (const SweepCell& c : result.cells) ++result.counts[c.status];
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "v_mag,v_ang_deg,status,iters,ms\n";
  for (const SweepCell& c : result.cells) {
    out += format("%.6g,%.6g,%s,%d,%.3f\n", c.guess.vm, c.guess.va_deg,
                  std::string(to_string(c.status)).c_str(), c.iterations, c.ms);
  }
  out += "# " + sweep_summary(result) + "\n";
  return out;
}

std::string sweep_summary(const SweepResult& result) {
  std::string out = "cells=" + std::to_string(result.cells.size());
  for (SolveStatus s : {SolveStatus::HighVoltage, SolveStatus::LowVoltage, SolveStatus::AngleUnstable,
                        SolveStatus::Diverged, SolveStatus::MaxIterations}) {
    out += " " + std::string(to_string(s)) + "=" + std::to_string(result.count(s));
  }
  return out;
}

std::vector<CompareRow> run_compare(const Network& network, const std::vector<InitialGuess>& inits,
                                    const SolverSettings& settings) {
  if (inits.empty()) throw Error(ErrorCode::InvalidConfig, "at least one initial condition required");
  std::vector<CompareRow> rows;
  for (const InitialGuess& g : inits) {
    CompareRow row;
    row.guess = g;
    SolverSettings s = settings;
    try {
      s.method = Method::PlainNR;
      const SolveReport plain = solve_from_guess(network, g, s);
      row.plain = plain.status;
      row.plain_iterations = plain.total_iterations;
    } catch (const Error&) {
      row.plain = SolveStatus::Diverged;
    }
    try {
      s.method = Method::TxStepping;
      const SolveReport tx = solve_from_guess(network, g, s);
      row.tx = tx.status;
      row.tx_iterations = tx.total_iterations;
    } catch (const Error&) {
      row.tx = SolveStatus::Diverged;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "v_mag,v_ang_deg,plain_nr,plain_iters,tx,tx_iters\n";
  for (const CompareRow& r : rows) {
    out += format("%.6g,%.6g,%s,%d,%s,%d\n", r.guess.vm, r.guess.va_deg,
                  std::string(to_string(r.plain)).c_str(), r.plain_iterations,
                  std::string(to_string(r.tx)).c_str(), r.tx_iterations);
  }
  return out;
}

std::string compare_table(const std::vector<CompareRow>& rows) {
  std::string out = format("%-10s %-10s %-16s %-16s\n", "V_mag(pu)", "V_ang(deg)", "plain NR", "Tx stepping");
  for (const CompareRow& r : rows) {
    out += format("%-10.4g %-10.4g %-16s %-16s\n", r.guess.vm, r.guess.va_deg,
                  std::string(to_string(r.plain)).c_str(), std::string(to_string(r.tx)).c_str());
  }
  return out;
}

std::string trace_csv(const std::vector<IterationRecord>& trace) {
  std::string out = "iteration,lambda,zeta,max_dx,residual\n";
  for (const IterationRecord& r : trace) {
    out += format("%d,%.10g,%.6g,%.6e,%.6e\n", r.iteration, r.lambda, r.zeta, r.max_dx, r.residual);
  }
  return out;
}

std::string stage_csv(const SolveReport& report) {
  std::string out = "stage,lambda,iterations,status,max_residual\n";
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const StageRecord& s = report.stages[i];
    out += format("%zu,%.10g,%d,%s,%.6e\n", i, s.lambda, s.iterations,
                  std::string(to_string(s.status)).c_str(), s.residual);
  }
  return out;
}

}  // namespace txflow
