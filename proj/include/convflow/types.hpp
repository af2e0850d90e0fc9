#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace convflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidProblem : Error {
  using Error::Error;
};

struct ScheduleError : Error {
  using Error::Error;
};

// Parameter outside the range covered by any available bound.
struct UnsupportedParameter : ScheduleError {
  using ScheduleError::ScheduleError;
};

struct ParameterError : Error {
  using Error::Error;
};

struct InvalidModel : Error {
  using Error::Error;
};

struct UnsupportedSolver : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace convflow
