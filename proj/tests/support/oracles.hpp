// Independent reference computations shared by the unit and acceptance
// tests. Nothing in here calls the linear solver or the stamp code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "txflow/network.hpp"
#include "txflow/nr_core.hpp"
#include "txflow/stamps.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(std::size_t n, const std::vector<txflow::Triplet>& triplets) {
  Dense a(n, std::vector<double>(n, 0.0));
  for (const auto& t : triplets) a[t.row][t.col] += t.value;
  return a;
}

// Gaussian elimination with partial pivoting. Returns an empty vector when a
// pivot vanishes.
inline std::vector<double> dense_solve(Dense a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    }
    if (a[p][k] == 0.0) return {};
    std::swap(a[p], a[k]);
    std::swap(b[p], b[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      if (m == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

// Lossless line of reactance x feeding a unity power factor load p from a
// 1∠0 source: V2 = cos d ∠ -d with sin(2d) = 2 x p.
struct TwoBus {
  double vm;
  double va_deg;
};

inline TwoBus two_bus(double x, double p) {
  const double d = 0.5 * std::asin(2.0 * x * p);
  return {std::cos(d), -d * 180.0 / std::acos(-1.0)};
}

// Central differences of the residual with respect to every unknown.
inline Dense fd_jacobian(const txflow::Network& net, const txflow::IndexMap& index,
                         const txflow::SolutionState& state, const txflow::HomotopyConfig& cfg,
                         double h = 1e-5) {
  const std::size_t n = index.size();
  Dense j(n, std::vector<double>(n, 0.0));
  txflow::SolutionState s = state;
  for (std::size_t c = 0; c < n; ++c) {
    const double x0 = s.x[c];
    s.x[c] = x0 + h;
    const auto fp = txflow::residual(net, index, s, cfg);
    s.x[c] = x0 - h;
    const auto fm = txflow::residual(net, index, s, cfg);
    s.x[c] = x0;
    for (std::size_t r = 0; r < n; ++r) j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
  }
  return j;
}

struct Mismatch {
  std::size_t row = 0;
  std::size_t col = 0;
  double stamped = 0.0;
  double reference = 0.0;
  bool ok = true;
};

// First entry violating |a - b| <= max(abs_tol, rel_tol * |b|).
inline Mismatch compare(const Dense& a, const Dense& b, double abs_tol, double rel_tol) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double tol = std::max(abs_tol, rel_tol * std::abs(b[r][c]));
      if (!(std::abs(a[r][c] - b[r][c]) <= tol)) return {r, c, a[r][c], b[r][c], false};
    }
  }
  return {};
}

struct RandomCase {
  txflow::Network network;
  txflow::SolutionState state;
  txflow::HomotopyConfig homotopy;
};

// Small meshed network exercising every device kind: taps, phase shifters,
// negative reactance, charging, shunts, constant-power and linear loads,
// local and remote voltage control.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t max_buses = 10) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * (max_buses - 1));

  RandomCase rc;
  txflow::Network& net = rc.network;
  net.name = "random";
  for (std::size_t i = 0; i < n; ++i) {
    txflow::Bus bus;
    bus.id = static_cast<int>(i + 1);
    if (i == 0) {
      bus.kind = txflow::BusKind::Slack;
      bus.v_set = uni(0.95, 1.08);
      bus.angle_set = uni(-0.3, 0.3);
    } else if (u(rng) < 0.3) {
      bus.kind = txflow::BusKind::PV;
      bus.v_set = uni(0.95, 1.08);
    }
    net.buses.push_back(bus);
  }
  net.slack = 0;

  auto add_branch = [&](std::size_t a, std::size_t b) {
    txflow::Branch br;
    br.from = a;
    br.to = b;
    br.r = uni(0.0, 0.05);
    br.x = uni(0.02, 0.3) * (u(rng) < 0.1 ? -1.0 : 1.0);
    br.b_charging = u(rng) < 0.5 ? uni(0.0, 0.3) : 0.0;
    br.tap = u(rng) < 0.4 ? uni(0.9, 1.1) : 1.0;
    br.shift = u(rng) < 0.3 ? uni(-0.3, 0.3) : 0.0;
    net.branches.push_back(br);
  };
  for (std::size_t i = 1; i < n; ++i) add_branch(static_cast<std::size_t>(u(rng) * i), i);
  const int extra = static_cast<int>(u(rng) * (n / 2 + 1));
  for (int e = 0; e < extra; ++e) {
    const std::size_t a = static_cast<std::size_t>(u(rng) * n);
    std::size_t b = static_cast<std::size_t>(u(rng) * n);
    if (a == b) b = (b + 1) % n;
    add_branch(a, b);
  }

  std::vector<bool> regulated(n, false);
  regulated[0] = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (net.buses[i].kind == txflow::BusKind::PV) regulated[i] = true;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (net.buses[i].kind == txflow::BusKind::PQ) {
      txflow::Load ld;
      ld.bus = i;
      ld.p = uni(-0.5, 1.0);
      ld.q = uni(-0.3, 0.5);
      if (u(rng) < 0.2) {
        ld.big = txflow::BigLoad{uni(0.0, 0.5), uni(-0.5, 0.5), {uni(-0.3, 0.3), uni(-0.3, 0.3)}};
      }
      net.loads.push_back(ld);
    }
    if (u(rng) < 0.3) net.shunts.push_back({i, uni(0.0, 0.05), uni(-0.3, 0.3)});
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (net.buses[i].kind != txflow::BusKind::PV) continue;
    std::size_t target = i;
    if (u(rng) < 0.3) {
      for (std::size_t t = 1; t < n; ++t) {
        if (!regulated[t]) {
          target = t;
          regulated[t] = true;
          break;
        }
      }
    }
    txflow::Generator g;
    g.bus = i;
    g.p = uni(0.0, 1.5);
    g.v_set = net.buses[i].v_set;
    g.controlled_bus = target;
    net.controls.push_back({i, target, g.v_set, net.gens.size()});
    net.gens.push_back(g);
  }

  const txflow::IndexMap index(net);
  rc.state.x.assign(index.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double vm = uni(0.85, 1.15);
    const double va = uni(-0.5, 0.5);
    rc.state.x[index.vr(i)] = vm * std::cos(va);
    rc.state.x[index.vi(i)] = vm * std::sin(va);
  }
  for (std::size_t k = 0; k < net.controls.size(); ++k) rc.state.x[index.qg(k)] = uni(-1.0, 1.0);
  rc.state.x[index.slack_ir()] = uni(-2.0, 2.0);
  rc.state.x[index.slack_ii()] = uni(-2.0, 2.0);

  rc.homotopy.active = u(rng) < 0.8;
  rc.homotopy.lambda = u(rng) < 0.2 ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
  rc.homotopy.shunt_relax = u(rng) < 0.7;
  return rc;
}

// Random square sparse matrix with a permuted nonzero diagonal so it is
// structurally nonsingular.
struct RandomSparse {
  std::size_t n = 0;
  std::vector<txflow::Triplet> triplets;
  std::vector<double> rhs;
};

inline RandomSparse random_sparse(std::mt19937_64& rng, std::size_t max_n = 100) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomSparse s;
  s.n = 1 + static_cast<std::size_t>(u(rng) * max_n);
  std::vector<std::size_t> perm(s.n);
  for (std::size_t i = 0; i < s.n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  const double density = 0.02 + 0.2 * u(rng);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    s.triplets.push_back({i, perm[i], sign * (2.0 + 2.0 * u(rng))});
    for (std::size_t j = 0; j < s.n; ++j) {
      if (u(rng) < density) s.triplets.push_back({i, j, 2.0 * u(rng) - 1.0});
    }
  }
  s.rhs.resize(s.n);
  for (double& v : s.rhs) v = 10.0 * (2.0 * u(rng) - 1.0);
  return s;
}

}  // namespace oracle
