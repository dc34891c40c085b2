#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "txflow/network.hpp"
#include "txflow/state.hpp"

namespace txflow {

struct SolveReport;

// Case data in source units (MW, MVAr, degrees), as read from a file.
struct RawBus {
  int id = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 slack, 4 isolated
  double pd = 0.0;
  double qd = 0.0;
  double gs = 0.0;  // MW consumed at 1 pu
  double bs = 0.0;  // MVAr injected at 1 pu
  double vm = 1.0;
  double va = 0.0;
  double base_kv = 0.0;
};

struct RawGen {
  int bus = 0;
  double pg = 0.0;
  double qg = 0.0;
  double qmax = 0.0;
  double qmin = 0.0;
  double vg = 1.0;
  int status = 1;
  std::optional<int> controlled_bus;
  bool implicit = false;  // synthesized for a slack bus without a generator
};

struct RawBranch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;
  double tap = 0.0;
  double shift = 0.0;
  int status = 1;
};

// Linear load parameters, already in per unit.
struct RawBigLoad {
  int bus = 0;
  double g = 0.0;
  double b = 0.0;
  double ir = 0.0;
  double ii = 0.0;
};

struct RawCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<RawBus> buses;
  std::vector<RawGen> gens;
  std::vector<RawBranch> branches;
  std::vector<RawBigLoad> big_loads;
  std::vector<std::string> warnings;
};

RawCase parse_matpower(std::string_view text);
RawCase parse_json_case(std::string_view text);

// Reads a case from disk; `.json` selects the native format, anything else
// is parsed as MATPOWER text. Throws Error(Io) when the file is unreadable.
RawCase load_case(const std::filesystem::path& path);

// MATPOWER v2 text for the captured fields (implicit gens are omitted).
std::string format_matpower(const RawCase& raw);

// Per-unit conversion. Out-of-service elements and isolated buses are
// dropped; several generators on one bus merge into one injection. Throws
// Error(NonPositiveBase), Error(IslandWithoutSlack) or Error(InvalidNetwork).
Network to_network(const RawCase& raw, std::vector<std::string>* warnings = nullptr);

struct BusSolution {
  int id = 0;
  double vm = 0.0;
  double va_deg = 0.0;
  double vr = 0.0;
  double vi = 0.0;
};

std::vector<BusSolution> bus_solutions(const Network& network, const SolutionState& state);

// Deterministic solution document (format 1). Numbers carry 12 significant
// digits.
std::string write_solution(const SolveReport& report, const SolutionState& state,
                           const Network& network);

}  // namespace txflow
