#pragma once

#include "convflow/types.hpp"

#include <optional>

namespace convflow {

// Phase-space point shared by flows, Lyapunov functions and solver traces.
struct FlowState {
  double t = 0.0;
  Vector x;
  std::optional<Vector> v;
  std::optional<double> gamma;
};

}  // namespace convflow
