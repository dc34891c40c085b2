#pragma once

#include <vector>

namespace txflow {

// Unknown vector laid out per IndexMap plus the damping state of the
// Newton iteration that produced it.
struct SolutionState {
  std::vector<double> x;
  double zeta = 1.0;
  int iteration = 0;
};

}  // namespace txflow
