#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "txflow/case_io.hpp"
#include "txflow/error.hpp"
#include "txflow/homotopy.hpp"
#include "txflow/nr_core.hpp"

using namespace txflow;

namespace {

Network two_bus() { return to_network(load_case(TXFLOW_TEST_DATA "/cases/two_bus.json")); }

Network one_bus() {
  Network net;
  net.buses.push_back({1, BusKind::Slack, 1.0, 0.0});
  return net;
}

}  // namespace

TEST_CASE("limited Newton update") {
  Network net = one_bus();
  net.buses.push_back({2, BusKind::PQ});
  net.branches.push_back({0, 1, 0.0, 0.1});
  const IndexMap idx(net);
  SolutionState s;
  s.x = {1.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  NRConfig cfg;
  SolutionState n = nr_step(s, std::vector<double>{0.5, 0, -0.05, 0, 0, 0}, idx, cfg);
  CHECK(n.x[0] == doctest::Approx(1.1));
  CHECK(n.x[2] == doctest::Approx(0.95));
  CHECK(n.iteration == 1);

  // Non-voltage unknowns take the full correction.
  n = nr_step(s, std::vector<double>{0, 0, 0, 0, 3.0, -7.0}, idx, cfg);
  CHECK(n.x[4] == 3.0);
  CHECK(n.x[5] == -7.0);

  s.x[0] = 1.95;
  n = nr_step(s, std::vector<double>{0.5, 0, 0, 0, 0, 0}, idx, cfg);
  CHECK(n.x[0] == doctest::Approx(2.0));

  cfg.voltage_limiting = false;
  n = nr_step(s, std::vector<double>{0.5, 0, 0, 0, 0, 0}, idx, cfg);
  CHECK(n.x[0] == doctest::Approx(2.45));

  CHECK_THROWS_AS(nr_step(s, std::vector<double>{std::nan(""), 0, 0, 0, 0, 0}, idx, cfg), Error);
  CHECK_THROWS_AS(nr_step(s, std::vector<double>{0, 0}, idx, cfg), Error);
}

TEST_CASE("zeta heuristic") {
  NRConfig cfg;
  CHECK(update_zeta(1.0, {{0.5}, {1.0}}, cfg) == doctest::Approx(0.5));
  CHECK(update_zeta(0.5, {{0.01, 0.01}, {2.0, 1.0}}, cfg) == doctest::Approx(0.75));
  CHECK(update_zeta(cfg.zeta_min, {{0.5}, {1.0}}, cfg) == doctest::Approx(cfg.zeta_min));
  CHECK(update_zeta(0.9, {{0.01, 0.01}, {2.0, 1.0}}, cfg) == doctest::Approx(1.0));
  CHECK(update_zeta(0.5, {{0.01, 0.01}, {1.0, 1.0}}, cfg) == doctest::Approx(0.5));
  CHECK(update_zeta(0.5, {}, cfg) == doctest::Approx(0.5));
}

TEST_CASE("configuration checks") {
  NRConfig cfg;
  CHECK_NOTHROW(cfg.check());
  cfg.dv_max = 0.0;
  CHECK_THROWS_AS(cfg.check(), Error);
  cfg = {};
  cfg.v_min = 3.0;
  CHECK_THROWS_AS(cfg.check(), Error);
  cfg = {};
  cfg.zeta_min = 0.0;
  CHECK_THROWS_AS(cfg.check(), Error);
}

TEST_CASE("residual") {
  // Generator exactly covering a local load.
  Network net = one_bus();
  net.buses.push_back({2, BusKind::PV, 1.0});
  net.branches.push_back({0, 1, 0.01, 0.1});
  net.loads.push_back({1, 0.3, 0.1, std::nullopt});
  net.gens.push_back({1, 0.3, 1.0, 1});
  net.controls.push_back({1, 1, 1.0, 0});
  const IndexMap idx(net);
  SolutionState s = flat_state(net, idx, 1.0, 0.0);
  s.x[idx.qg(0)] = 0.1;
  for (double v : residual(net, idx, s, HomotopyConfig::disabled())) CHECK(std::abs(v) < 1e-14);
  s.x[idx.vr(1)] += 0.01;
  CHECK(max_abs(residual(net, idx, s, HomotopyConfig::disabled())) > 0.0);

  Network tb = two_bus();
  const IndexMap ti(tb);
  const SolutionState flat = flat_state(tb, ti, 1.0, 0.0);
  CHECK(max_abs(residual(tb, ti, flat, HomotopyConfig::disabled())) > 1e-3);
  CHECK_THROWS_AS(residual(tb, ti, flat_state(tb, ti, 1e-3, 0.0), HomotopyConfig::disabled(), 1e-4), Error);
}

TEST_CASE("two-bus Newton matches the closed form") {
  const Network net = two_bus();
  const IndexMap idx(net);
  const NRResult r = solve_nr(net, idx, flat_state(net, idx, 1.0, 0.0), HomotopyConfig::disabled(), {});
  CHECK(r.status == SolveStatus::HighVoltage);
  CHECK(r.iterations <= 6);
  CHECK(r.final_residual < 1e-6);
  const auto ref = oracle::two_bus(0.1, 0.1);
  CHECK(bus_vm(r.state, idx, 1) == doctest::Approx(ref.vm).epsilon(1e-10));
  CHECK(bus_va(r.state, idx, 1) * 180.0 / std::numbers::pi == doctest::Approx(ref.va_deg).epsilon(1e-8));
  CHECK(ref.vm == doctest::Approx(0.99995).epsilon(1e-5));
  CHECK(ref.va_deg == doctest::Approx(-0.5730).epsilon(1e-4));
  REQUIRE(r.trace.size() == static_cast<std::size_t>(r.iterations));
  for (const IterationRecord& rec : r.trace) {
    CHECK(rec.max_dv_applied <= 0.1 + 1e-15);
    CHECK(rec.zeta >= 0.05);
    CHECK(rec.zeta <= 1.0);
  }
}

TEST_CASE("slack-only network converges in one iteration") {
  const Network net = one_bus();
  const IndexMap idx(net);
  const NRResult r = solve_nr(net, idx, flat_state(net, idx, 1.0, 0.0), HomotopyConfig::disabled(), {});
  CHECK(r.status == SolveStatus::HighVoltage);
  CHECK(r.iterations == 1);
  CHECK(bus_vm(r.state, idx, 0) == doctest::Approx(1.0));
}

TEST_CASE("infeasible load is not reported as a high-voltage solution") {
  const Network net = to_network(load_case(TXFLOW_TEST_DATA "/cases/two_bus_overload.json"));
  const IndexMap idx(net);
  const NRResult r = solve_nr(net, idx, flat_state(net, idx, 1.0, 0.0), HomotopyConfig::disabled(), {});
  CHECK(r.status != SolveStatus::HighVoltage);
}

TEST_CASE("solution classes") {
  Network net = one_bus();
  net.buses.push_back({2, BusKind::PQ});
  net.branches.push_back({0, 1, 0.0, 0.1});
  const IndexMap idx(net);
  NRConfig cfg;
  auto at = [&](double vm, double deg) {
    return flat_state(net, idx, vm, deg * std::numbers::pi / 180.0);
  };
  CHECK(classify_solution(net, at(0.98, -5), cfg) == SolveStatus::HighVoltage);
  CHECK(classify_solution(net, at(0.45, -5), cfg) == SolveStatus::LowVoltage);
  CHECK(classify_solution(net, at(1.0, 120), cfg) == SolveStatus::AngleUnstable);
  CHECK(classify_solution(net, at(1.3, 0), cfg) == SolveStatus::LowVoltage);

  // Phase shift is excluded from the angle across a branch.
  net.branches[0].shift = 100.0 * std::numbers::pi / 180.0;
  CHECK(classify_solution(net, at(1.0, -100), cfg) == SolveStatus::HighVoltage);
}

TEST_CASE("status names") {
  CHECK(to_string(SolveStatus::HighVoltage) == "HighVoltage");
  CHECK(to_string(SolveStatus::MaxIterations) == "MaxIterations");
  CHECK(is_converged(SolveStatus::LowVoltage));
  CHECK_FALSE(is_converged(SolveStatus::Diverged));
}
