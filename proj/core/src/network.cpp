#include "txflow/network.hpp"

#include <cmath>
#include <queue>
#include <set>

#include "txflow/error.hpp"

namespace txflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::DuplicateBusId: return "DuplicateBusId";
    case ErrorCode::UnknownBusReference: return "UnknownBusReference";
    case ErrorCode::NoSlackBus: return "NoSlackBus";
    case ErrorCode::IslandWithoutSlack: return "IslandWithoutSlack";
    case ErrorCode::NonPositiveBase: return "NonPositiveBase";
    case ErrorCode::InvalidNetwork: return "InvalidNetwork";
    case ErrorCode::ZeroImpedanceBranch: return "ZeroImpedanceBranch";
    case ErrorCode::VoltageCollapseFloor: return "VoltageCollapseFloor";
    case ErrorCode::NonFiniteStep: return "NonFiniteStep";
    case ErrorCode::StructurallySingular: return "StructurallySingular";
    case ErrorCode::NumericallySingular: return "NumericallySingular";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "?";
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::NoSlack: return "NoSlack";
    case DiagnosticKind::MultipleSlack: return "MultipleSlack";
    case DiagnosticKind::ZeroImpedanceBranch: return "ZeroImpedanceBranch";
    case DiagnosticKind::IslandWithoutSource: return "IslandWithoutSource";
    case DiagnosticKind::BadBusReference: return "BadBusReference";
    case DiagnosticKind::NonPositiveSetpoint: return "NonPositiveSetpoint";
    case DiagnosticKind::DuplicateControl: return "DuplicateControl";
    case DiagnosticKind::ControlMismatch: return "ControlMismatch";
    case DiagnosticKind::NonFiniteValue: return "NonFiniteValue";
  }
  return "?";
}

std::optional<std::size_t> Network::find_bus(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  return std::nullopt;
}

SeriesAdmittance series_admittance(double r, double x) {
  const double z2 = r * r + x * x;
  if (z2 == 0.0) {
    throw Error(ErrorCode::ZeroImpedanceBranch, "series impedance r = x = 0");
  }
  return {r / z2, -x / z2};
}

IndexMap::IndexMap(const Network& network)
    : buses_(network.buses.size()), controls_(network.controls.size()) {}

IndexMap build_index(const Network& network) { return IndexMap(network); }

namespace {

std::string bus_label(const Network& net, std::size_t i) {
  return "bus " + std::to_string(net.buses[i].id);
}

}  // namespace

std::vector<Diagnostic> validate(const Network& network) {
  std::vector<Diagnostic> out;
  const std::size_t nb = network.buses.size();
  auto add = [&](DiagnosticKind kind, std::string element, std::string message) {
    out.push_back({kind, std::move(element), std::move(message)});
  };

  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < nb; ++i) {
    const Bus& bus = network.buses[i];
    if (bus.kind == BusKind::Slack) ++slack_count;
    if (bus.kind != BusKind::PQ && !(bus.v_set > 0.0)) {
      add(DiagnosticKind::NonPositiveSetpoint, bus_label(network, i), "voltage setpoint must be positive");
    }
    if (!std::isfinite(bus.v_set) || !std::isfinite(bus.angle_set)) {
      add(DiagnosticKind::NonFiniteValue, bus_label(network, i), "non-finite setpoint");
    }
  }
  if (slack_count == 0) add(DiagnosticKind::NoSlack, "network", "no slack bus");
  if (slack_count > 1) {
    add(DiagnosticKind::MultipleSlack, "network", std::to_string(slack_count) + " slack buses");
  }
  if (slack_count >= 1 &&
      (network.slack >= nb || network.buses[network.slack].kind != BusKind::Slack)) {
    add(DiagnosticKind::BadBusReference, "network", "slack index does not point at a slack bus");
  }

  for (std::size_t k = 0; k < network.branches.size(); ++k) {
    const Branch& br = network.branches[k];
    const std::string label = "branch " + std::to_string(k);
    if (br.from >= nb || br.to >= nb) {
      add(DiagnosticKind::BadBusReference, label, "endpoint out of range");
      continue;
    }
    if (br.r == 0.0 && br.x == 0.0) {
      add(DiagnosticKind::ZeroImpedanceBranch, label, "r = x = 0");
    }
    if (!std::isfinite(br.r) || !std::isfinite(br.x) || !std::isfinite(br.b_charging) ||
        !std::isfinite(br.tap) || !std::isfinite(br.shift) || br.tap == 0.0) {
      add(DiagnosticKind::NonFiniteValue, label, "invalid branch parameter");
    }
  }
  for (std::size_t k = 0; k < network.loads.size(); ++k) {
    const Load& ld = network.loads[k];
    if (ld.bus >= nb) add(DiagnosticKind::BadBusReference, "load " + std::to_string(k), "bus out of range");
    if (!std::isfinite(ld.p) || !std::isfinite(ld.q)) {
      add(DiagnosticKind::NonFiniteValue, "load " + std::to_string(k), "non-finite power");
    }
  }
  for (std::size_t k = 0; k < network.shunts.size(); ++k) {
    const Shunt& sh = network.shunts[k];
    if (sh.bus >= nb) add(DiagnosticKind::BadBusReference, "shunt " + std::to_string(k), "bus out of range");
    if (!std::isfinite(sh.g) || !std::isfinite(sh.b)) {
      add(DiagnosticKind::NonFiniteValue, "shunt " + std::to_string(k), "non-finite admittance");
    }
  }

  if (network.controls.size() != network.gens.size()) {
    add(DiagnosticKind::ControlMismatch, "network", "one control record per generator expected");
  }
  std::set<std::size_t> controlled;
  for (std::size_t k = 0; k < network.controls.size(); ++k) {
    const VoltageControl& c = network.controls[k];
    const std::string label = "control " + std::to_string(k);
    if (c.controlling >= nb || c.controlled >= nb) {
      add(DiagnosticKind::BadBusReference, label, "bus out of range");
      continue;
    }
    if (c.generator != k || k >= network.gens.size() || network.gens[k].bus != c.controlling) {
      add(DiagnosticKind::ControlMismatch, label, "control does not match its generator");
    }
    if (!controlled.insert(c.controlled).second) {
      add(DiagnosticKind::DuplicateControl, bus_label(network, c.controlled),
          "bus voltage regulated by more than one control");
    }
    if (network.buses[c.controlled].kind == BusKind::Slack) {
      add(DiagnosticKind::DuplicateControl, bus_label(network, c.controlled),
          "slack bus voltage cannot be regulated by a control");
    }
    if (!(c.v_set > 0.0)) add(DiagnosticKind::NonPositiveSetpoint, label, "setpoint must be positive");
  }

  // Every connected component needs a voltage source (slack or PV).
  std::vector<std::vector<std::size_t>> adj(nb);
  for (const Branch& br : network.branches) {
    if (br.from < nb && br.to < nb) {
      adj[br.from].push_back(br.to);
      adj[br.to].push_back(br.from);
    }
  }
  for (const VoltageControl& c : network.controls) {
    if (c.controlling < nb && c.controlled < nb && c.controlling != c.controlled) {
      adj[c.controlling].push_back(c.controlled);
      adj[c.controlled].push_back(c.controlling);
    }
  }
  std::vector<int> seen(nb, 0);
  for (std::size_t start = 0; start < nb; ++start) {
    if (seen[start]) continue;
    bool source = false;
    std::size_t members = 0;
    std::queue<std::size_t> todo;
    todo.push(start);
    seen[start] = 1;
    while (!todo.empty()) {
      const std::size_t u = todo.front();
      todo.pop();
      ++members;
      if (network.buses[u].kind != BusKind::PQ) source = true;
      for (std::size_t v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          todo.push(v);
        }
      }
    }
    if (!source) {
      add(DiagnosticKind::IslandWithoutSource, bus_label(network, start),
          "island of " + std::to_string(members) + " bus(es) has no slack or PV bus");
    }
  }
  return out;
}

}  // namespace txflow
