#pragma once

#include <optional>
#include <string>
#include <vector>

#include "txflow/network.hpp"
#include "txflow/nr_core.hpp"
#include "txflow/stamps.hpp"
#include "txflow/state.hpp"

namespace txflow {

struct HomotopySchedule {
  double lambda_init = 1.0;
  double step_init = 0.1;
  double step_min = 1e-4;
  double shrink = 0.5;
  double grow = 2.0;
  int max_stages = 200;

  // Throws Error(InvalidConfig).
  void check() const;
};

enum class Method { PlainNR, TxStepping };

std::string_view to_string(Method method);

struct StageRecord {
  double lambda = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::Diverged;
  double residual = 0.0;
};

struct SolveReport {
  Method method = Method::TxStepping;
  SolveStatus status = SolveStatus::Diverged;
  std::vector<StageRecord> stages;  // accepted stages, strictly decreasing lambda
  int failed_stages = 0;
  int total_iterations = 0;
  SolutionState state;
  double final_lambda = 1.0;
  double max_residual = 0.0;  // ||F||_inf of the final state, homotopy disabled
  double wall_ms = 0.0;
  bool honored_init = false;
  std::vector<IterationRecord> trace;  // every Newton iteration, all stages
  std::string message;
};

// Voltage guess vm∠va (radians) on every non-slack bus; slack at setpoint,
// Q_G = 0, slack currents 0.
SolutionState flat_state(const Network& network, const IndexMap& index, double vm, double va);

// Starting point of the shorted network: slack complex voltage everywhere,
// controlled buses at their setpoint magnitude.
SolutionState trivial_start(const Network& network, const IndexMap& index);

struct LambdaDecision {
  enum class Kind { Advance, Backtrack, Done, Underflow };
  Kind kind = Kind::Advance;
  double lambda = 0.0;  // lambda of the next stage
  double step = 0.0;    // step that produced it
};

// `lambda` is the last converged stage, `attempted` the stage just solved
// (equal to `lambda` on success).
LambdaDecision next_lambda(double lambda, double step, bool success, int iterations,
                           int max_iter, const HomotopySchedule& schedule);

struct TxOptions {
  HomotopySchedule schedule;
  HomotopyConfig homotopy;
  bool honor_init = false;
};

SolveReport solve_tx_stepping(const Network& network, const SolutionState& init,
                              const NRConfig& cfg, const TxOptions& options);

// Plain Newton-Raphson on the original network, wrapped as a report.
SolveReport solve_plain(const Network& network, const SolutionState& init, const NRConfig& cfg);

}  // namespace txflow
