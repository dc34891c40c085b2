#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace txflow {

using Complex = std::complex<double>;

enum class BusKind { Slack, PV, PQ };

std::string_view to_string(BusKind kind);

// All electrical quantities below are per unit on the system base.

struct Bus {
  int id = 0;  // external bus number
  BusKind kind = BusKind::PQ;
  double v_set = 1.0;      // Slack/PV only
  double angle_set = 0.0;  // radians, Slack only
};

struct Branch {
  std::size_t from = 0;
  std::size_t to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charging = 0.0;  // total; split half per terminal
  double tap = 1.0;         // off-nominal ratio at the from end
  double shift = 0.0;       // radians
  int source_row = -1;      // row in the originating case table
};

struct Generator {
  std::size_t bus = 0;
  double p = 0.0;
  double v_set = 1.0;
  std::size_t controlled_bus = 0;
  double q_init = 0.0;
};

// Linear load: draws (g + jb) V + current.
struct BigLoad {
  double g = 0.0;
  double b = 0.0;
  Complex current{};
};

struct Load {
  std::size_t bus = 0;
  double p = 0.0;
  double q = 0.0;
  std::optional<BigLoad> big;  // when set, p/q are ignored
};

struct Shunt {
  std::size_t bus = 0;
  double g = 0.0;
  double b = 0.0;
};

// Generator `generator` regulates |V| at `controlled` from bus `controlling`.
struct VoltageControl {
  std::size_t controlling = 0;
  std::size_t controlled = 0;
  double v_set = 1.0;
  std::size_t generator = 0;
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;  // voltage-controlling generators only
  std::vector<Load> loads;
  std::vector<Shunt> shunts;
  std::vector<VoltageControl> controls;  // controls[k].generator == k
  std::size_t slack = 0;
  std::string name;

  std::size_t bus_count() const { return buses.size(); }
  std::optional<std::size_t> find_bus(int id) const;
};

struct SeriesAdmittance {
  double g = 0.0;
  double b = 0.0;
};

// Throws Error(ZeroImpedanceBranch) when r = x = 0.
SeriesAdmittance series_admittance(double r, double x);

// Positions of every unknown in the solution vector. Rows of the stamped
// system use the same layout: bus KCL rows pair with the bus voltages,
// control rows with Q_G, slack-voltage rows with the slack currents.
class IndexMap {
 public:
  explicit IndexMap(const Network& network);

  std::size_t vr(std::size_t bus) const { return 2 * bus; }
  std::size_t vi(std::size_t bus) const { return 2 * bus + 1; }
  std::size_t qg(std::size_t control) const { return 2 * buses_ + control; }
  std::size_t slack_ir() const { return 2 * buses_ + controls_; }
  std::size_t slack_ii() const { return 2 * buses_ + controls_ + 1; }

  std::size_t size() const { return 2 * buses_ + controls_ + 2; }
  std::size_t bus_count() const { return buses_; }
  std::size_t control_count() const { return controls_; }
  bool is_voltage(std::size_t position) const { return position < 2 * buses_; }

  bool operator==(const IndexMap&) const = default;

 private:
  std::size_t buses_ = 0;
  std::size_t controls_ = 0;
};

IndexMap build_index(const Network& network);

enum class DiagnosticKind {
  NoSlack,
  MultipleSlack,
  ZeroImpedanceBranch,
  IslandWithoutSource,
  BadBusReference,
  NonPositiveSetpoint,
  DuplicateControl,
  ControlMismatch,
  NonFiniteValue,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::string element;  // e.g. "bus 12", "branch 7"
  std::string message;
};

std::vector<Diagnostic> validate(const Network& network);

}  // namespace txflow
