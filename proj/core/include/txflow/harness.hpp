#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txflow/homotopy.hpp"
#include "txflow/network.hpp"
#include "txflow/nr_core.hpp"

namespace txflow {

struct InitialGuess {
  double vm = 1.0;
  double va_deg = 0.0;
};

struct SolverSettings {
  Method method = Method::TxStepping;
  NRConfig nr;
  TxOptions tx;
};

// Solves from a flat guess applied to every non-slack bus. For Tx stepping
// the guess seeds the lambda = 1 stage only when tx.honor_init is set.
SolveReport solve_from_guess(const Network& network, const InitialGuess& guess,
                             const SolverSettings& settings);

struct SweepSpec {
  double mag_lo = 0.6;
  double mag_hi = 1.0;
  double ang_lo = -50.0;
  double ang_hi = 50.0;
  int n_mag = 5;
  int n_ang = 5;
  // Alternate family: V_R uniform on [0.6, 1.1], V_I = 1 - V_R.
  bool real_imag_family = false;
  int family_points = 10;
  // Random sampling in the magnitude/angle box instead of the grid.
  int samples = 0;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool keep_voltages = false;
  SolverSettings solver;

  // Throws Error(InvalidConfig).
  void check() const;
};

struct SweepCell {
  int row = 0;
  int col = 0;
  InitialGuess guess;
  SolveStatus status = SolveStatus::Diverged;
  int iterations = 0;
  double ms = 0.0;
  double max_residual = 0.0;
  std::vector<std::complex<double>> voltages;  // when keep_voltages
  std::vector<IterationRecord> trace;          // when keep_voltages
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major
  std::map<SolveStatus, int> counts;

  int count(SolveStatus s) const {
    auto it = counts.find(s);
    return it == counts.end() ? 0 : it->second;
  }
};

std::vector<InitialGuess> sweep_points(const SweepSpec& spec, int* rows = nullptr,
                                       int* cols = nullptr);
SweepResult run_sweep(const Network& network, const SweepSpec& spec);
std::string sweep_csv(const SweepResult& result);
std::string sweep_summary(const SweepResult& result);

struct CompareRow {
  InitialGuess guess;
  SolveStatus plain = SolveStatus::Diverged;
  int plain_iterations = 0;
  SolveStatus tx = SolveStatus::Diverged;
  int tx_iterations = 0;
};

std::vector<CompareRow> run_compare(const Network& network, const std::vector<InitialGuess>& inits,
                                    const SolverSettings& settings);
std::string compare_csv(const std::vector<CompareRow>& rows);
std::string compare_table(const std::vector<CompareRow>& rows);

std::string trace_csv(const std::vector<IterationRecord>& trace);
std::string stage_csv(const SolveReport& report);

}  // namespace txflow
