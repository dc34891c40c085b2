#include "txflow/homotopy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "txflow/error.hpp"
#include "txflow/linear_solver.hpp"

namespace txflow {

std::string_view to_string(Method method) {
  return method == Method::PlainNR ? "plain-nr" : "tx";
}

void HomotopySchedule::check() const {
  if (!(step_min > 0.0 && step_min <= step_init && step_init <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < step_min <= step_init <= 1");
  }
  if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidConfig, "shrink must lie in (0, 1)");
  if (!(grow >= 1.0)) throw Error(ErrorCode::InvalidConfig, "grow must be >= 1");
  if (!(lambda_init > 0.0 && lambda_init <= 1.0)) throw Error(ErrorCode::InvalidConfig, "lambda_init must lie in (0, 1]");
  if (max_stages < 1) throw Error(ErrorCode::InvalidConfig, "max_stages must be >= 1");
}

SolutionState flat_state(const Network& network, const IndexMap& index, double vm, double va) {
  SolutionState s;
  s.x.assign(index.size(), 0.0);
  for (std::size_t b = 0; b < network.buses.size(); ++b) {
    s.x[index.vr(b)] = vm * std::cos(va);
    s.x[index.vi(b)] = vm * std::sin(va);
  }
  const Bus& slack = network.buses[network.slack];
  s.x[index.vr(network.slack)] = slack.v_set * std::cos(slack.angle_set);
  s.x[index.vi(network.slack)] = slack.v_set * std::sin(slack.angle_set);
  return s;
}

SolutionState trivial_start(const Network& network, const IndexMap& index) {
  const Bus& slack = network.buses[network.slack];
  SolutionState s = flat_state(network, index, slack.v_set, slack.angle_set);
  for (const VoltageControl& c : network.controls) {
    s.x[index.vr(c.controlled)] = c.v_set * std::cos(slack.angle_set);
    s.x[index.vi(c.controlled)] = c.v_set * std::sin(slack.angle_set);
  }
  return s;
}

LambdaDecision next_lambda(double lambda, double step, bool success, int iterations,
                           int max_iter, const HomotopySchedule& schedule) {
  LambdaDecision d;
  if (success) {
    if (lambda <= 0.0) {
      d.kind = LambdaDecision::Kind::Done;
      d.lambda = 0.0;
      d.step = step;
      return d;
    }
    if (iterations <= 1) {
      // Iterate already solved the stage: try the original problem directly.
      step = lambda;
    } else if (iterations < max_iter / 4.0) {
      step = std::min(step * schedule.grow, lambda);
    }
    d.kind = LambdaDecision::Kind::Advance;
  } else {
    step *= schedule.shrink;
    if (step < schedule.step_min) {
      d.kind = LambdaDecision::Kind::Underflow;
      d.lambda = lambda;
      d.step = step;
      return d;
    }
    d.kind = LambdaDecision::Kind::Backtrack;
  }
  d.step = step;
  d.lambda = std::max(0.0, lambda - step);
  return d;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void finalize(const Network& network, SolveReport& report) {
  const IndexMap index(network);
  try {
    report.max_residual = max_abs(residual(network, index, report.state, HomotopyConfig::disabled()));
  } catch (const Error&) {
    report.max_residual = std::numeric_limits<double>::infinity();
  }
}

}  // namespace

SolveReport solve_tx_stepping(const Network& network, const SolutionState& init,
                              const NRConfig& cfg, const TxOptions& options) {
  const auto start = Clock::now();
  options.schedule.check();
  cfg.check();
  const IndexMap index(network);

  SolveReport report;
  report.method = Method::TxStepping;
  report.honored_init = options.honor_init;

  HomotopyConfig hcfg = options.homotopy;
  hcfg.active = true;
  hcfg.lambda = options.schedule.lambda_init;
  LinearSolver solver;

  const SolutionState first = options.honor_init ? init : trivial_start(network, index);
  NRResult stage = solve_nr(network, index, first, hcfg, cfg, &solver);
  report.total_iterations += stage.iterations;
  report.trace.insert(report.trace.end(), stage.trace.begin(), stage.trace.end());
  if (!is_converged(stage.status)) {
    report.status = SolveStatus::Diverged;
    report.failed_stages = 1;
    report.state = std::move(stage.state);
    report.final_lambda = hcfg.lambda;
    report.message = "initial stage failed: " + std::string(to_string(stage.status));
    finalize(network, report);
    report.wall_ms = elapsed_ms(start);
    return report;
  }

  double lambda = hcfg.lambda;
  double step = options.schedule.step_init;
  report.stages.push_back({lambda, stage.iterations, stage.status, stage.final_residual});
  SolutionState accepted = std::move(stage.state);
  SolveStatus accepted_status = stage.status;
  LambdaDecision decision = next_lambda(lambda, step, true, stage.iterations, cfg.max_iter, options.schedule);

  int attempts = 1;
  while (decision.kind != LambdaDecision::Kind::Done) {
    if (decision.kind == LambdaDecision::Kind::Underflow || attempts >= options.schedule.max_stages) {
      report.status = SolveStatus::Diverged;
      report.message = decision.kind == LambdaDecision::Kind::Underflow
                           ? "lambda step underflow at lambda=" + std::to_string(lambda)
                           : "stage limit reached at lambda=" + std::to_string(lambda);
      report.state = std::move(accepted);
      report.final_lambda = lambda;
      finalize(network, report);
      report.wall_ms = elapsed_ms(start);
      return report;
    }
    ++attempts;
    step = decision.step;
    hcfg.lambda = decision.lambda;
    stage = solve_nr(network, index, accepted, hcfg, cfg, &solver);
    report.total_iterations += stage.iterations;
    report.trace.insert(report.trace.end(), stage.trace.begin(), stage.trace.end());
    const bool ok = is_converged(stage.status);
    if (ok) {
      lambda = hcfg.lambda;
      accepted = std::move(stage.state);
      accepted_status = stage.status;
      report.stages.push_back({lambda, stage.iterations, stage.status, stage.final_residual});
    } else {
      ++report.failed_stages;
    }
    decision = next_lambda(lambda, step, ok, stage.iterations, cfg.max_iter, options.schedule);
  }

  report.status = accepted_status;
  report.state = std::move(accepted);
  report.final_lambda = 0.0;
  finalize(network, report);
  report.wall_ms = elapsed_ms(start);
  return report;
}

SolveReport solve_plain(const Network& network, const SolutionState& init, const NRConfig& cfg) {
  const auto start = Clock::now();
  const IndexMap index(network);
  NRResult r = solve_nr(network, index, init, HomotopyConfig::disabled(), cfg);
  SolveReport report;
  report.method = Method::PlainNR;
  report.status = r.status;
  report.total_iterations = r.iterations;
  report.final_lambda = 0.0;
  if (is_converged(r.status)) {
    report.stages.push_back({0.0, r.iterations, r.status, r.final_residual});
  } else {
    report.failed_stages = 1;
  }
  report.trace = std::move(r.trace);
  report.state = std::move(r.state);
  report.honored_init = true;
  finalize(network, report);
  report.wall_ms = elapsed_ms(start);
  return report;
}

}  // namespace txflow
