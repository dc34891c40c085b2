#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace txflow {

enum class ErrorCode {
  // case_io
  MalformedTable,
  MissingSection,
  DuplicateBusId,
  UnknownBusReference,
  NoSlackBus,
  IslandWithoutSlack,
  NonPositiveBase,
  InvalidNetwork,
  // network
  ZeroImpedanceBranch,
  // stamps / nr_core
  VoltageCollapseFloor,
  NonFiniteStep,
  // linear_solver
  StructurallySingular,
  NumericallySingular,
  DimensionMismatch,
  // homotopy
  StepUnderflow,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace txflow
