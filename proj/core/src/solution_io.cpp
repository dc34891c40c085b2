#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "json.hpp"
#include "txflow/case_io.hpp"
#include "txflow/homotopy.hpp"

namespace txflow {

namespace {

// 12 significant digits; the shortest round-trip form of the rounded value
// is what gets printed.
double sig12(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return sig12(v);
}

}  // namespace

std::string write_solution(const SolveReport& report, const SolutionState& state,
                           const Network& network) {
  using nlohmann::ordered_json;
  const IndexMap index(network);

  ordered_json doc;
  doc["format"] = 1;
  doc["case"] = network.name;
  doc["method"] = to_string(report.method);
  doc["status"] = to_string(report.status);
  doc["iterations"] = report.total_iterations;
  doc["stages"] = report.stages.size();
  doc["failed_stages"] = report.failed_stages;
  doc["final_lambda"] = number(report.final_lambda);
  doc["max_residual"] = number(report.max_residual);
  doc["honored_init"] = report.honored_init;

  ordered_json buses = ordered_json::array();
  for (const BusSolution& b : bus_solutions(network, state)) {
    ordered_json row;
    row["id"] = b.id;
    row["vm"] = number(b.vm);
    row["va_deg"] = number(b.va_deg);
    row["vr"] = number(b.vr);
    row["vi"] = number(b.vi);
    buses.push_back(std::move(row));
  }
  doc["buses"] = std::move(buses);

  ordered_json gens = ordered_json::array();
  for (std::size_t k = 0; k < network.gens.size(); ++k) {
    ordered_json row;
    row["bus"] = network.buses[network.gens[k].bus].id;
    row["controlled_bus"] = network.buses[network.controls[k].controlled].id;
    row["q_g"] = number(state.x[index.qg(k)]);
    gens.push_back(std::move(row));
  }
  doc["generators"] = std::move(gens);

  ordered_json slack;
  slack["bus"] = network.buses[network.slack].id;
  slack["ir"] = number(state.x[index.slack_ir()]);
  slack["ii"] = number(state.x[index.slack_ii()]);
  doc["slack"] = std::move(slack);
  return doc.dump(1) + "\n";
}

}  // namespace txflow
