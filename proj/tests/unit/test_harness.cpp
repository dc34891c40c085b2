#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "txflow/case_io.hpp"
#include "txflow/error.hpp"
#include "txflow/harness.hpp"

using namespace txflow;

namespace {

Network two_bus() { return to_network(load_case(TXFLOW_TEST_DATA "/cases/two_bus.json")); }

}  // namespace

TEST_CASE("grid points") {
  SweepSpec spec;
  int rows = 0;
  int cols = 0;
  const auto pts = sweep_points(spec, &rows, &cols);
  CHECK(rows == 5);
  CHECK(cols == 5);
  REQUIRE(pts.size() == 25);
  CHECK(pts.front().vm == doctest::Approx(0.6));
  CHECK(pts.front().va_deg == doctest::Approx(-50.0));
  CHECK(pts[1].va_deg == doctest::Approx(-25.0));
  CHECK(pts.back().vm == doctest::Approx(1.0));
  CHECK(pts.back().va_deg == doctest::Approx(50.0));
}

TEST_CASE("real-imaginary family") {
  SweepSpec spec;
  spec.real_imag_family = true;
  const auto pts = sweep_points(spec);
  REQUIRE(pts.size() == 10);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double vr = pts[i].vm * std::cos(pts[i].va_deg * std::acos(-1.0) / 180.0);
    const double vi = pts[i].vm * std::sin(pts[i].va_deg * std::acos(-1.0) / 180.0);
    CHECK(vr == doctest::Approx(0.6 + 0.5 * i / 9.0));
    CHECK(vr + vi == doctest::Approx(1.0));
  }
}

TEST_CASE("random sampling is reproducible and needs a seed") {
  SweepSpec spec;
  spec.samples = 4;
  CHECK_THROWS_AS(sweep_points(spec), Error);
  spec.seed = 42;
  const auto a = sweep_points(spec);
  const auto b = sweep_points(spec);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].vm == b[i].vm);
    CHECK(a[i].vm >= 0.6);
    CHECK(a[i].vm <= 1.0);
    CHECK(std::abs(a[i].va_deg) <= 50.0);
  }
}

TEST_CASE("bad sweep specs") {
  SweepSpec spec;
  spec.n_mag = 0;
  CHECK_THROWS_AS(spec.check(), Error);
  spec = {};
  spec.mag_lo = 1.2;
  CHECK_THROWS_AS(spec.check(), Error);
  spec = {};
  spec.jobs = 0;
  CHECK_THROWS_AS(spec.check(), Error);
}

TEST_CASE("sweep on the two-bus case") {
  SweepSpec spec;
  spec.n_mag = 2;
  spec.n_ang = 2;
  spec.jobs = 2;
  spec.keep_voltages = true;
  const SweepResult r = run_sweep(two_bus(), spec);
  REQUIRE(r.cells.size() == 4);
  CHECK(r.count(SolveStatus::HighVoltage) == 4);
  const auto ref = oracle::two_bus(0.1, 0.1);
  for (const SweepCell& c : r.cells) {
    REQUIRE(c.voltages.size() == 2);
    CHECK(std::abs(c.voltages[1]) == doctest::Approx(ref.vm).epsilon(1e-9));
    CHECK(c.max_residual < 1e-6);
    CHECK(!c.trace.empty());
  }
  CHECK(r.cells[3].row == 1);
  CHECK(r.cells[3].col == 1);

  const std::string csv = sweep_csv(r);
  CHECK(csv.rfind("v_mag,v_ang_deg,status,iters,ms\n0.6,-50,HighVoltage,", 0) == 0);
  CHECK(csv.find("# cells=4 HighVoltage=4") != std::string::npos);
}

TEST_CASE("compare") {
  const Network net = two_bus();
  CHECK_THROWS_AS(run_compare(net, {}, {}), Error);
  const auto rows = run_compare(net, {{1.0, 0.0}, {0.71, 45.0}}, {});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].plain == SolveStatus::HighVoltage);
  CHECK(rows[0].tx == SolveStatus::HighVoltage);
  CHECK(rows[1].tx == SolveStatus::HighVoltage);
  CHECK(compare_csv(rows).rfind("v_mag,v_ang_deg,plain_nr,plain_iters,tx,tx_iters\n1,0,HighVoltage,", 0) == 0);
  CHECK(compare_table(rows).find("0.71") != std::string::npos);
}

TEST_CASE("trace exports") {
  std::vector<IterationRecord> trace(2);
  trace[0].iteration = 1;
  trace[1].iteration = 2;
  const std::string csv = trace_csv(trace);
  CHECK(csv.rfind("iteration,lambda,zeta,max_dx,residual\n1,", 0) == 0);
  SolveReport rep;
  rep.stages.push_back({1.0, 3, SolveStatus::HighVoltage, 1e-9});
  CHECK(stage_csv(rep).find("0,1,3,HighVoltage,") != std::string::npos);
}
