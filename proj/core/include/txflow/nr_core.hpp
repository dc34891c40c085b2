#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "txflow/network.hpp"
#include "txflow/stamps.hpp"
#include "txflow/state.hpp"

namespace txflow {

struct NRConfig {
  double tol_dv = 1e-8;
  double tol_res = 1e-6;
  int max_iter = 50;
  double dv_max = 0.1;
  double v_min = -2.0;
  double v_max = 2.0;
  double zeta_min = 0.05;
  double zeta_shrink = 0.5;
  double zeta_grow = 1.5;
  double collapse_floor = 1e-4;
  double vm_low = 0.8;
  double vm_high = 1.2;
  double angle_max = std::numbers::pi / 2.0;
  double divergence_limit = 1e6;
  int max_halvings = 12;
  bool variable_limiting = true;
  bool voltage_limiting = true;

  // Throws Error(InvalidConfig).
  void check() const;
};

enum class SolveStatus { HighVoltage, LowVoltage, AngleUnstable, Diverged, MaxIterations };

std::string_view to_string(SolveStatus status);

inline bool is_converged(SolveStatus s) {
  return s == SolveStatus::HighVoltage || s == SolveStatus::LowVoltage ||
         s == SolveStatus::AngleUnstable;
}

struct IterationRecord {
  int iteration = 0;
  double lambda = 0.0;
  double zeta = 1.0;
  double max_dx = 0.0;        // largest raw Newton correction of any voltage unknown
  double max_dv_applied = 0.0;  // largest voltage change actually applied
  double residual = 0.0;      // ||F||_inf at the iterate the step was computed from
  double v_lo = 0.0;          // extreme voltage components after the step
  double v_hi = 0.0;
  int halvings = 0;
};

// Nonlinear KCL mismatch (currents leaving minus injected) per bus, then
// the voltage-control and slack-voltage constraint residuals. Throws
// Error(VoltageCollapseFloor) when |V|^2 at a constant-power bus is below
// `collapse_floor`.
std::vector<double> residual(const Network& network, const IndexMap& index,
                             const SolutionState& state, const HomotopyConfig& cfg,
                             double collapse_floor = 0.0);

double max_abs(std::span<const double> v);

// Limited update: voltages move by at most dv_max per component and stay in
// [v_min, v_max]; Q_G and slack currents take the full correction. Throws
// Error(NonFiniteStep).
SolutionState nr_step(const SolutionState& state, std::span<const double> delta,
                      const IndexMap& index, const NRConfig& cfg);

struct StepHistory {
  std::vector<double> max_dv;  // largest |dV_R|, |dV_I| per iteration
  std::vector<double> error;   // error norm per iteration
};

double update_zeta(double zeta, const StepHistory& history, const NRConfig& cfg);

SolveStatus classify_solution(const Network& network, const SolutionState& state,
                              const NRConfig& cfg);

struct NRResult {
  SolutionState state;
  SolveStatus status = SolveStatus::Diverged;
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<IterationRecord> trace;
};

class LinearSolver;

// Newton-Raphson at the homotopy point in `hcfg`. Convergence needs both
// max voltage correction < tol_dv and ||F||_inf < tol_res; the converged
// state is classified. `solver` may be shared across calls to reuse the
// symbolic factorization.
NRResult solve_nr(const Network& network, const IndexMap& index, const SolutionState& init,
                  const HomotopyConfig& hcfg, const NRConfig& cfg,
                  LinearSolver* solver = nullptr);

// Voltage magnitude and angle (radians) of one bus.
inline double bus_vm(const SolutionState& s, const IndexMap& idx, std::size_t bus) {
  return std::hypot(s.x[idx.vr(bus)], s.x[idx.vi(bus)]);
}
inline double bus_va(const SolutionState& s, const IndexMap& idx, std::size_t bus) {
  return std::atan2(s.x[idx.vi(bus)], s.x[idx.vr(bus)]);
}

}  // namespace txflow
