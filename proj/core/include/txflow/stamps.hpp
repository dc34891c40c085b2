#pragma once

#include <cstddef>
#include <vector>

#include "txflow/network.hpp"
#include "txflow/state.hpp"

namespace txflow {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Linearized equivalent circuit for one Newton iteration: A x_next = rhs.
// Duplicate (row, col) triplets are summed on assembly.
struct SparseSystem {
  std::size_t n = 0;
  std::vector<Triplet> triplets;
  std::vector<double> rhs;

  explicit SparseSystem(std::size_t dim = 0) : n(dim), rhs(dim, 0.0) {}

  void add(std::size_t row, std::size_t col, double value) { triplets.push_back({row, col, value}); }
  void add_rhs(std::size_t row, double value) { rhs[row] += value; }

  // y = A x
  std::vector<double> multiply(const std::vector<double>& x) const;
};

// Tx-stepping embedding. lambda = 1 is the virtually shorted network,
// lambda = 0 the original one. With `active` false every device stamps its
// unmodified parameters.
struct HomotopyConfig {
  double gamma = 999.0;
  double lambda = 0.0;
  double g_ctrl = 100.0;      // virtual remote-control branch conductance at lambda = 1
  bool shunt_relax = true;    // relax line charging along with bus shunts
  bool active = true;

  static HomotopyConfig disabled() {
    HomotopyConfig cfg;
    cfg.active = false;
    return cfg;
  }

  double series_scale() const { return active ? 1.0 + lambda * gamma : 1.0; }
  double shunt_scale() const { return active ? 1.0 - lambda : 1.0; }
  double charging_scale() const { return active && shunt_relax ? 1.0 - lambda : 1.0; }
  double effective_tap(double tap) const { return active ? tap + lambda * (1.0 - tap) : tap; }
  double effective_shift(double shift) const { return active ? shift - lambda * shift : shift; }
  double control_conductance() const { return active ? lambda * g_ctrl : 0.0; }

  // Throws Error(InvalidConfig).
  void check() const;
};

// Two-port admittance of a pi-model branch with an ideal transformer
// (tap * e^{j shift}) at the from end: I_from = yff Vf + yft Vt,
// I_to = ytf Vf + ytt Vt.
struct BranchAdmittance {
  Complex yff, yft, ytf, ytt;
};

BranchAdmittance branch_admittance(const Branch& branch, const HomotopyConfig& cfg);

// Current drawn by a constant-power load, and injected by a generator with
// fixed P and the given Q, at voltage vr + j vi.
Complex constant_power_current(double p, double q, double vr, double vi);

// Partial derivatives of constant_power_current.
struct PowerCurrentJacobian {
  double dir_dvr, dir_dvi, dii_dvr, dii_dvi;
  double dir_dq, dii_dq;
};
PowerCurrentJacobian constant_power_jacobian(double p, double q, double vr, double vi);

struct StampContext {
  const IndexMap& index;
  const SolutionState& state;
  double collapse_floor = 1e-4;
};

void stamp_branch(const Branch& branch, const HomotopyConfig& cfg, const IndexMap& index,
                  SparseSystem& sys);
void stamp_shunt(const Shunt& shunt, const HomotopyConfig& cfg, const IndexMap& index,
                 SparseSystem& sys);
void stamp_slack(const Bus& bus, std::size_t bus_index, const IndexMap& index, SparseSystem& sys);
// Throws Error(VoltageCollapseFloor).
void stamp_pq_load(const Load& load, const StampContext& ctx, SparseSystem& sys);
// `control` is the position of the generator's Q_G unknown; zeta scales the
// voltage derivatives only. Throws Error(VoltageCollapseFloor).
void stamp_pv_generator(const Generator& gen, std::size_t control, const StampContext& ctx,
                        SparseSystem& sys);
void stamp_voltage_control(const VoltageControl& ctrl, std::size_t control,
                           const HomotopyConfig& cfg, const StampContext& ctx, SparseSystem& sys);
void stamp_big_load(const Load& load, const IndexMap& index, SparseSystem& sys);

SparseSystem assemble_system(const Network& network, const IndexMap& index,
                             const SolutionState& state, const HomotopyConfig& cfg,
                             double collapse_floor = 1e-4);

}  // namespace txflow
