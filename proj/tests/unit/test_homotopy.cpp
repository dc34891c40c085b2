#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "txflow/case_io.hpp"
#include "txflow/error.hpp"
#include "txflow/homotopy.hpp"

using namespace txflow;
using Kind = LambdaDecision::Kind;

namespace {

Network load_test(const char* name) {
  return to_network(load_case(std::string(TXFLOW_TEST_DATA "/cases/") + name));
}

}  // namespace

TEST_CASE("lambda schedule") {
  const HomotopySchedule sch;
  LambdaDecision d = next_lambda(1.0, 0.2, true, 3, 50, sch);
  CHECK(d.kind == Kind::Advance);
  CHECK(d.step == doctest::Approx(0.4));
  CHECK(d.lambda == doctest::Approx(0.6));

  d = next_lambda(0.1, 0.2, true, 3, 50, sch);
  CHECK(d.lambda == 0.0);

  d = next_lambda(0.5, 0.2, true, 20, 50, sch);
  CHECK(d.step == doctest::Approx(0.2));
  CHECK(d.lambda == doctest::Approx(0.3));

  d = next_lambda(0.5, 0.2, false, 50, 50, sch);
  CHECK(d.kind == Kind::Backtrack);
  CHECK(d.step == doctest::Approx(0.1));
  CHECK(d.lambda == doctest::Approx(0.4));

  d = next_lambda(0.5, 1.5e-4, false, 50, 50, sch);
  CHECK(d.kind == Kind::Underflow);

  d = next_lambda(0.0, 0.2, true, 4, 50, sch);
  CHECK(d.kind == Kind::Done);

  d = next_lambda(1.0, 0.1, true, 1, 50, sch);
  CHECK(d.lambda == 0.0);
}

TEST_CASE("schedule checks") {
  HomotopySchedule s;
  CHECK_NOTHROW(s.check());
  s.step_min = 0.0;
  CHECK_THROWS_AS(s.check(), Error);
  s = {};
  s.shrink = 1.0;
  CHECK_THROWS_AS(s.check(), Error);
  s = {};
  s.lambda_init = 0.0;
  CHECK_THROWS_AS(s.check(), Error);
}

TEST_CASE("shorted-network starting point") {
  Network net = load_test("three_bus.m");
  const IndexMap idx(net);
  const SolutionState s = trivial_start(net, idx);
  CHECK(bus_vm(s, idx, 0) == doctest::Approx(1.04));
  CHECK(bus_vm(s, idx, 1) == doctest::Approx(1.02));
  CHECK(bus_vm(s, idx, 2) == doctest::Approx(1.04));
  for (std::size_t k = 0; k < idx.control_count(); ++k) CHECK(s.x[idx.qg(k)] == 0.0);
  CHECK(s.x[idx.slack_ir()] == 0.0);

  net.buses[0].angle_set = 30.0 * std::numbers::pi / 180.0;
  const SolutionState r = trivial_start(net, idx);
  for (std::size_t b = 0; b < 3; ++b) CHECK(bus_va(r, idx, b) == doctest::Approx(std::numbers::pi / 6.0));
}

TEST_CASE("tx stepping reaches the plain solution on the two-bus case") {
  const Network net = load_test("two_bus.json");
  const IndexMap idx(net);
  const NRConfig cfg;
  const SolveReport plain = solve_plain(net, flat_state(net, idx, 1.0, 0.0), cfg);
  REQUIRE(plain.status == SolveStatus::HighVoltage);

  TxOptions opt;
  opt.honor_init = true;
  const SolveReport tx = solve_tx_stepping(net, flat_state(net, idx, 0.6, 50.0 * std::numbers::pi / 180.0), cfg, opt);
  CHECK(tx.status == SolveStatus::HighVoltage);
  CHECK(tx.final_lambda == 0.0);
  CHECK(tx.max_residual < 1e-6);
  for (std::size_t i = 0; i < 2 * idx.bus_count(); ++i) {
    CHECK(tx.state.x[i] == doctest::Approx(plain.state.x[i]).epsilon(1e-8));
  }
  REQUIRE(!tx.stages.empty());
  CHECK(tx.stages.front().lambda == 1.0);
  CHECK(tx.stages.back().lambda == 0.0);
  for (std::size_t i = 1; i < tx.stages.size(); ++i) CHECK(tx.stages[i].lambda < tx.stages[i - 1].lambda);
  for (const IterationRecord& r : tx.trace) {
    CHECK(r.max_dv_applied <= cfg.dv_max + 1e-15);
    CHECK(r.v_lo >= cfg.v_min);
    CHECK(r.v_hi <= cfg.v_max);
  }
}

TEST_CASE("trivial network finishes right after the shorted stage") {
  Network net;
  net.buses.push_back({1, BusKind::Slack, 1.0, 0.0});
  net.buses.push_back({2, BusKind::PQ});
  net.branches.push_back({0, 1, 0.0, 0.1});
  const IndexMap idx(net);
  const SolveReport r = solve_tx_stepping(net, trivial_start(net, idx), NRConfig{}, TxOptions{});
  CHECK(r.status == SolveStatus::HighVoltage);
  REQUIRE(r.stages.size() == 2);
  CHECK(r.stages[0].lambda == 1.0);
  CHECK(r.stages[1].lambda == 0.0);
}

TEST_CASE("remote voltage control is honoured") {
  const Network net = to_network(load_case(TXFLOW_TEST_DATA "/cases/remote.json"));
  REQUIRE(net.controls.size() == 1);
  const IndexMap idx(net);
  const SolveReport r = solve_tx_stepping(net, trivial_start(net, idx), NRConfig{}, TxOptions{});
  CHECK(r.status == SolveStatus::HighVoltage);
  CHECK(bus_vm(r.state, idx, net.controls[0].controlled) == doctest::Approx(net.controls[0].v_set).epsilon(1e-8));
  const SolveReport p = solve_plain(net, flat_state(net, idx, 1.0, 0.0), NRConfig{});
  CHECK(p.status == SolveStatus::HighVoltage);
  for (std::size_t i = 0; i < 2 * idx.bus_count(); ++i) CHECK(r.state.x[i] == doctest::Approx(p.state.x[i]).epsilon(1e-8));
}

TEST_CASE("three-bus case with tap and phase shift") {
  const Network net = load_test("three_bus.m");
  const IndexMap idx(net);
  const SolveReport p = solve_plain(net, flat_state(net, idx, 1.0, 0.0), NRConfig{});
  const SolveReport t = solve_tx_stepping(net, trivial_start(net, idx), NRConfig{}, TxOptions{});
  REQUIRE(p.status == SolveStatus::HighVoltage);
  REQUIRE(t.status == SolveStatus::HighVoltage);
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(t.state.x[i] == doctest::Approx(p.state.x[i]).epsilon(1e-7));
}
