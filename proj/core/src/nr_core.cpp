#include "txflow/nr_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "txflow/error.hpp"
#include "txflow/linear_solver.hpp"

namespace txflow {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::HighVoltage: return "HighVoltage";
    case SolveStatus::LowVoltage: return "LowVoltage";
    case SolveStatus::AngleUnstable: return "AngleUnstable";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

void NRConfig::check() const {
  if (!(tol_dv > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol_dv must be > 0");
  if (!(tol_res > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol_res must be > 0");
  if (!(dv_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "dv_max must be > 0");
  if (!(v_min < v_max)) throw Error(ErrorCode::InvalidConfig, "v_min must be < v_max");
  if (!(zeta_min > 0.0 && zeta_min <= 1.0)) throw Error(ErrorCode::InvalidConfig, "zeta_min must lie in (0, 1]");
  if (!(zeta_shrink > 0.0 && zeta_shrink <= 1.0)) throw Error(ErrorCode::InvalidConfig, "zeta_shrink must lie in (0, 1]");
  if (!(zeta_grow >= 1.0)) throw Error(ErrorCode::InvalidConfig, "zeta_grow must be >= 1");
  if (max_iter < 1) throw Error(ErrorCode::InvalidConfig, "max_iter must be >= 1");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(x));
  }
  return m;
}

namespace {

Complex voltage(const SolutionState& s, const IndexMap& idx, std::size_t bus) {
  return {s.x[idx.vr(bus)], s.x[idx.vi(bus)]};
}

void check_floor(Complex v, double floor, std::size_t bus) {
  if (std::norm(v) < floor) {
    throw Error(ErrorCode::VoltageCollapseFloor, "|V|^2 below floor at bus index " + std::to_string(bus));
  }
}

}  // namespace

std::vector<double> residual(const Network& network, const IndexMap& index,
                             const SolutionState& state, const HomotopyConfig& cfg,
                             double collapse_floor) {
  std::vector<Complex> kcl(network.buses.size());
  for (const Branch& br : network.branches) {
    const BranchAdmittance y = branch_admittance(br, cfg);
    const Complex vf = voltage(state, index, br.from);
    const Complex vt = voltage(state, index, br.to);
    kcl[br.from] += y.yff * vf + y.yft * vt;
    kcl[br.to] += y.ytf * vf + y.ytt * vt;
  }
  for (const Shunt& sh : network.shunts) {
    kcl[sh.bus] += cfg.shunt_scale() * Complex(sh.g, sh.b) * voltage(state, index, sh.bus);
  }
  for (const Load& ld : network.loads) {
    const Complex v = voltage(state, index, ld.bus);
    if (ld.big) {
      kcl[ld.bus] += Complex(ld.big->g, ld.big->b) * v + ld.big->current;
    } else {
      check_floor(v, collapse_floor, ld.bus);
      kcl[ld.bus] += constant_power_current(ld.p, ld.q, v.real(), v.imag());
    }
  }
  for (std::size_t k = 0; k < network.gens.size(); ++k) {
    const Generator& g = network.gens[k];
    const Complex v = voltage(state, index, g.bus);
    check_floor(v, collapse_floor, g.bus);
    kcl[g.bus] -= constant_power_current(g.p, state.x[index.qg(k)], v.real(), v.imag());
  }

  std::vector<double> f(index.size(), 0.0);
  for (std::size_t k = 0; k < network.controls.size(); ++k) {
    const VoltageControl& c = network.controls[k];
    const Complex vw = voltage(state, index, c.controlled);
    f[index.qg(k)] = c.v_set * c.v_set - std::norm(vw);
    const double g = cfg.control_conductance();
    if (c.controlling != c.controlled && g > 0.0) {
      const Complex i = g * (voltage(state, index, c.controlling) - vw);
      kcl[c.controlling] += i;
      kcl[c.controlled] -= i;
    }
  }
  const Bus& slack = network.buses[network.slack];
  kcl[network.slack] -= Complex(state.x[index.slack_ir()], state.x[index.slack_ii()]);
  f[index.slack_ir()] = state.x[index.vr(network.slack)] - slack.v_set * std::cos(slack.angle_set);
  f[index.slack_ii()] = state.x[index.vi(network.slack)] - slack.v_set * std::sin(slack.angle_set);

  for (std::size_t b = 0; b < kcl.size(); ++b) {
    f[index.vr(b)] = kcl[b].real();
    f[index.vi(b)] = kcl[b].imag();
  }
  return f;
}

SolutionState nr_step(const SolutionState& state, std::span<const double> delta,
                      const IndexMap& index, const NRConfig& cfg) {
  if (delta.size() != state.x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "delta length does not match the state");
  }
  SolutionState next = state;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double d = delta[i];
    if (!std::isfinite(d)) throw Error(ErrorCode::NonFiniteStep, "non-finite Newton correction");
    if (!index.is_voltage(i)) {
      next.x[i] += d;
      continue;
    }
    if (cfg.voltage_limiting) {
      const double step = std::copysign(std::min(std::abs(d), cfg.dv_max), d);
      next.x[i] = std::clamp(state.x[i] + step, cfg.v_min, cfg.v_max);
    } else {
      next.x[i] += d;
    }
  }
  next.iteration = state.iteration + 1;
  return next;
}

double update_zeta(double zeta, const StepHistory& history, const NRConfig& cfg) {
  if (!history.max_dv.empty() && history.max_dv.back() > cfg.dv_max) {
    zeta = std::max(cfg.zeta_min, zeta * cfg.zeta_shrink);
  }
  const auto& e = history.error;
  if (e.size() >= 2 && e[e.size() - 1] < e[e.size() - 2]) {
    zeta = std::min(1.0, zeta * cfg.zeta_grow);
  }
  return std::clamp(zeta, cfg.zeta_min, 1.0);
}

SolveStatus classify_solution(const Network& network, const SolutionState& state,
                              const NRConfig& cfg) {
  const IndexMap index(network);
  bool low = false;
  bool high = false;
  for (std::size_t b = 0; b < network.buses.size(); ++b) {
    const double vm = bus_vm(state, index, b);
    if (!(vm >= cfg.vm_low)) low = true;
    if (vm > cfg.vm_high) high = true;
  }
  // Anything outside the acceptable band is reported as the low-voltage
  // (non-physical) class.
  if (low || high) return SolveStatus::LowVoltage;
  for (const Branch& br : network.branches) {
    const Complex vf = voltage(state, index, br.from);
    const Complex vt = voltage(state, index, br.to);
    const double spread = std::arg(vf * std::conj(vt) * std::polar(1.0, -br.shift));
    if (std::abs(spread) >= cfg.angle_max) return SolveStatus::AngleUnstable;
  }
  return SolveStatus::HighVoltage;
}

namespace {

bool collapsed(const Network& network, const IndexMap& index, const SolutionState& s, double floor) {
  for (const Load& ld : network.loads) {
    if (!ld.big && std::norm(voltage(s, index, ld.bus)) < floor) return true;
  }
  for (const Generator& g : network.gens) {
    if (std::norm(voltage(s, index, g.bus)) < floor) return true;
  }
  return false;
}

}  // namespace

NRResult solve_nr(const Network& network, const IndexMap& index, const SolutionState& init,
                  const HomotopyConfig& hcfg, const NRConfig& cfg, LinearSolver* solver) {
  cfg.check();
  hcfg.check();
  std::optional<LinearSolver> local;
  if (!solver) solver = &local.emplace();

  NRResult out;
  SolutionState state = init;
  state.zeta = 1.0;
  state.iteration = 0;
  StepHistory history;

  auto finish = [&](SolveStatus status, double fnorm) {
    out.state = std::move(state);
    out.status = status;
    out.final_residual = fnorm;
    return out;
  };

  for (int k = 1; k <= cfg.max_iter; ++k) {
    out.iterations = k;
    std::vector<double> f;
    try {
      f = residual(network, index, state, hcfg, cfg.collapse_floor);
    } catch (const Error&) {
      return finish(SolveStatus::Diverged, std::numeric_limits<double>::infinity());
    }
    const double fnorm = max_abs(f);
    if (!std::isfinite(fnorm) || fnorm > cfg.divergence_limit) {
      return finish(SolveStatus::Diverged, fnorm);
    }

    std::vector<double> delta;
    try {
      const SparseSystem sys = assemble_system(network, index, state, hcfg, cfg.collapse_floor);
      const Factors lu = solver->factorize(sys);
      // Newton correction: A (x_next - x) = rhs - A x.
      std::vector<double> b = lu.matrix().multiply(state.x);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = sys.rhs[i] - b[i];
      delta = solve(lu, b);
    } catch (const Error&) {
      return finish(SolveStatus::Diverged, fnorm);
    }

    IterationRecord rec;
    rec.iteration = k;
    rec.lambda = hcfg.active ? hcfg.lambda : 0.0;
    rec.zeta = state.zeta;
    rec.residual = fnorm;
    rec.max_dx = max_abs(std::span<const double>(delta).first(2 * index.bus_count()));

    if (!std::isfinite(rec.max_dx)) {
      out.trace.push_back(rec);
      return finish(SolveStatus::Diverged, fnorm);
    }

    const bool done = rec.max_dx < cfg.tol_dv && fnorm < cfg.tol_res;
    SolutionState next;
    int halvings = 0;
    try {
      next = nr_step(state, delta, index, cfg);
      while (collapsed(network, index, next, cfg.collapse_floor)) {
        if (++halvings > cfg.max_halvings) {
          out.trace.push_back(rec);
          return finish(SolveStatus::Diverged, fnorm);
        }
        for (double& d : delta) d *= 0.5;
        next = nr_step(state, delta, index, cfg);
      }
    } catch (const Error&) {
      out.trace.push_back(rec);
      return finish(SolveStatus::Diverged, fnorm);
    }

    rec.halvings = halvings;
    rec.v_lo = std::numeric_limits<double>::infinity();
    rec.v_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 2 * index.bus_count(); ++i) {
      rec.max_dv_applied = std::max(rec.max_dv_applied, std::abs(next.x[i] - state.x[i]));
      rec.v_lo = std::min(rec.v_lo, next.x[i]);
      rec.v_hi = std::max(rec.v_hi, next.x[i]);
    }
    out.trace.push_back(rec);

    history.max_dv.push_back(rec.max_dx);
    history.error.push_back(fnorm);
    const double zeta = cfg.variable_limiting ? update_zeta(state.zeta, history, cfg) : 1.0;
    state = std::move(next);
    state.zeta = zeta;

    if (done) {
      const double final_norm = max_abs(residual(network, index, state, hcfg, 0.0));
      const SolveStatus status = classify_solution(network, state, cfg);
      return finish(status, final_norm);
    }
  }
  double fnorm = std::numeric_limits<double>::infinity();
  try {
    fnorm = max_abs(residual(network, index, state, hcfg, 0.0));
  } catch (const Error&) {
  }
  return finish(SolveStatus::MaxIterations, fnorm);
}

}  // namespace txflow
