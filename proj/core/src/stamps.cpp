#include "txflow/stamps.hpp"

#include <cmath>
#include <string>

#include "txflow/error.hpp"

namespace txflow {

std::vector<double> SparseSystem::multiply(const std::vector<double>& x) const {
  std::vector<double> y(n, 0.0);
  for (const Triplet& t : triplets) y[t.row] += t.value * x[t.col];
  return y;
}

void HomotopyConfig::check() const {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "gamma must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidConfig, "lambda must lie in [0, 1]");
  if (!(g_ctrl > 0.0)) throw Error(ErrorCode::InvalidConfig, "g_ctrl must be > 0");
}

BranchAdmittance branch_admittance(const Branch& branch, const HomotopyConfig& cfg) {
  const SeriesAdmittance y = series_admittance(branch.r, branch.x);
  const Complex ys = Complex(y.g, y.b) * cfg.series_scale();
  const Complex charging(0.0, 0.5 * branch.b_charging * cfg.charging_scale());
  const double tap = cfg.effective_tap(branch.tap);
  const Complex t = std::polar(tap, cfg.effective_shift(branch.shift));
  return {(ys + charging) / (tap * tap), -ys / std::conj(t), -ys / t, ys + charging};
}

Complex constant_power_current(double p, double q, double vr, double vi) {
  const double d = vr * vr + vi * vi;
  return {(p * vr + q * vi) / d, (p * vi - q * vr) / d};
}

PowerCurrentJacobian constant_power_jacobian(double p, double q, double vr, double vi) {
  const double d = vr * vr + vi * vi;
  const double d2 = d * d;
  const double a = (p * (vi * vi - vr * vr) - 2.0 * q * vr * vi) / d2;
  const double c = (q * (vr * vr - vi * vi) - 2.0 * p * vr * vi) / d2;
  return {a, c, c, -a, vi / d, -vr / d};
}

namespace {

// Complex admittance y between the current of bus `row` and voltage of bus
// `col`, split into real and imaginary sub-circuits.
void stamp_block(const IndexMap& index, std::size_t row, std::size_t col, Complex y,
                 SparseSystem& sys) {
  sys.add(index.vr(row), index.vr(col), y.real());
  sys.add(index.vr(row), index.vi(col), -y.imag());
  sys.add(index.vi(row), index.vr(col), y.imag());
  sys.add(index.vi(row), index.vi(col), y.real());
}

void stamp_conductance(const IndexMap& index, std::size_t a, std::size_t b, double g,
                       SparseSystem& sys) {
  stamp_block(index, a, a, g, sys);
  stamp_block(index, a, b, -g, sys);
  stamp_block(index, b, a, -g, sys);
  stamp_block(index, b, b, g, sys);
}

struct BusVoltage {
  double vr, vi;
};

BusVoltage voltage_at(const StampContext& ctx, std::size_t bus, const char* what) {
  const double vr = ctx.state.x[ctx.index.vr(bus)];
  const double vi = ctx.state.x[ctx.index.vi(bus)];
  if (!(vr * vr + vi * vi >= ctx.collapse_floor)) {
    throw Error(ErrorCode::VoltageCollapseFloor,
                std::string(what) + " at bus index " + std::to_string(bus) + " has |V|^2 below floor");
  }
  return {vr, vi};
}

}  // namespace

void stamp_branch(const Branch& branch, const HomotopyConfig& cfg, const IndexMap& index,
                  SparseSystem& sys) {
  const BranchAdmittance y = branch_admittance(branch, cfg);
  stamp_block(index, branch.from, branch.from, y.yff, sys);
  stamp_block(index, branch.from, branch.to, y.yft, sys);
  stamp_block(index, branch.to, branch.from, y.ytf, sys);
  stamp_block(index, branch.to, branch.to, y.ytt, sys);
}

void stamp_shunt(const Shunt& shunt, const HomotopyConfig& cfg, const IndexMap& index,
                 SparseSystem& sys) {
  const double s = cfg.shunt_scale();
  stamp_block(index, shunt.bus, shunt.bus, Complex(s * shunt.g, s * shunt.b), sys);
}

void stamp_slack(const Bus& bus, std::size_t bus_index, const IndexMap& index, SparseSystem& sys) {
  // Constraint rows pin the voltage; the unknown currents inject into KCL.
  sys.add(index.slack_ir(), index.vr(bus_index), 1.0);
  sys.add_rhs(index.slack_ir(), bus.v_set * std::cos(bus.angle_set));
  sys.add(index.slack_ii(), index.vi(bus_index), 1.0);
  sys.add_rhs(index.slack_ii(), bus.v_set * std::sin(bus.angle_set));
  sys.add(index.vr(bus_index), index.slack_ir(), -1.0);
  sys.add(index.vi(bus_index), index.slack_ii(), -1.0);
}

void stamp_pq_load(const Load& load, const StampContext& ctx, SparseSystem& sys) {
  const auto [vr, vi] = voltage_at(ctx, load.bus, "constant-power load");
  const Complex i = constant_power_current(load.p, load.q, vr, vi);
  const PowerCurrentJacobian j = constant_power_jacobian(load.p, load.q, vr, vi);
  const std::size_t r = ctx.index.vr(load.bus);
  const std::size_t m = ctx.index.vi(load.bus);
  sys.add(r, r, j.dir_dvr);
  sys.add(r, m, j.dir_dvi);
  sys.add(m, r, j.dii_dvr);
  sys.add(m, m, j.dii_dvi);
  // Known terms of the Taylor expansion form the independent source.
  sys.add_rhs(r, j.dir_dvr * vr + j.dir_dvi * vi - i.real());
  sys.add_rhs(m, j.dii_dvr * vr + j.dii_dvi * vi - i.imag());
}

void stamp_pv_generator(const Generator& gen, std::size_t control, const StampContext& ctx,
                        SparseSystem& sys) {
  const auto [vr, vi] = voltage_at(ctx, gen.bus, "generator");
  const std::size_t qcol = ctx.index.qg(control);
  const double q = ctx.state.x[qcol];
  const double zeta = ctx.state.zeta;
  const Complex i = constant_power_current(gen.p, q, vr, vi);
  const PowerCurrentJacobian j = constant_power_jacobian(gen.p, q, vr, vi);
  const std::size_t r = ctx.index.vr(gen.bus);
  const std::size_t m = ctx.index.vi(gen.bus);
  // Injection: the KCL row sees -I_G.
  sys.add(r, r, -zeta * j.dir_dvr);
  sys.add(r, m, -zeta * j.dir_dvi);
  sys.add(r, qcol, -j.dir_dq);
  sys.add(m, r, -zeta * j.dii_dvr);
  sys.add(m, m, -zeta * j.dii_dvi);
  sys.add(m, qcol, -j.dii_dq);
  sys.add_rhs(r, i.real() - zeta * (j.dir_dvr * vr + j.dir_dvi * vi) - j.dir_dq * q);
  sys.add_rhs(m, i.imag() - zeta * (j.dii_dvr * vr + j.dii_dvi * vi) - j.dii_dq * q);
}

void stamp_voltage_control(const VoltageControl& ctrl, std::size_t control,
                           const HomotopyConfig& cfg, const StampContext& ctx, SparseSystem& sys) {
  const std::size_t row = ctx.index.qg(control);
  const double vr = ctx.state.x[ctx.index.vr(ctrl.controlled)];
  const double vi = ctx.state.x[ctx.index.vi(ctrl.controlled)];
  // F = V_set^2 - V_R^2 - V_I^2 linearized about the iterate.
  sys.add(row, ctx.index.vr(ctrl.controlled), -2.0 * vr);
  sys.add(row, ctx.index.vi(ctrl.controlled), -2.0 * vi);
  sys.add_rhs(row, -(vr * vr + vi * vi) - ctrl.v_set * ctrl.v_set);

  const double g = cfg.control_conductance();
  if (ctrl.controlling != ctrl.controlled && g > 0.0) {
    stamp_conductance(ctx.index, ctrl.controlling, ctrl.controlled, g, sys);
  }
}

void stamp_big_load(const Load& load, const IndexMap& index, SparseSystem& sys) {
  const BigLoad& big = *load.big;
  if (big.g == 0.0 && big.b == 0.0 && big.current == Complex{}) return;
  stamp_block(index, load.bus, load.bus, Complex(big.g, big.b), sys);
  sys.add_rhs(index.vr(load.bus), -big.current.real());
  sys.add_rhs(index.vi(load.bus), -big.current.imag());
}

SparseSystem assemble_system(const Network& network, const IndexMap& index,
                             const SolutionState& state, const HomotopyConfig& cfg,
                             double collapse_floor) {
  if (state.x.size() != index.size()) {
    throw Error(ErrorCode::DimensionMismatch, "state length does not match the index map");
  }
  SparseSystem sys(index.size());
  sys.triplets.reserve(16 * network.branches.size() + 6 * (network.loads.size() + network.gens.size()) +
                       4 * network.shunts.size() + 12 * network.controls.size() + 8);
  const StampContext ctx{index, state, collapse_floor};

  for (const Branch& br : network.branches) stamp_branch(br, cfg, index, sys);
  for (const Shunt& sh : network.shunts) stamp_shunt(sh, cfg, index, sys);
  for (const Load& ld : network.loads) {
    if (ld.big) {
      stamp_big_load(ld, index, sys);
    } else {
      stamp_pq_load(ld, ctx, sys);
    }
  }
  for (std::size_t k = 0; k < network.gens.size(); ++k) stamp_pv_generator(network.gens[k], k, ctx, sys);
  for (std::size_t k = 0; k < network.controls.size(); ++k) {
    stamp_voltage_control(network.controls[k], k, cfg, ctx, sys);
  }
  stamp_slack(network.buses[network.slack], network.slack, index, sys);
  return sys;
}

}  // namespace txflow
