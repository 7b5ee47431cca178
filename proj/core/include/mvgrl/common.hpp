#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mvgrl {

using Real = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Contract violation in caller-supplied data (maps to CLI exit code 2).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Failure while computing or doing I/O (maps to CLI exit code 1).
struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_arg(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

inline void check_run(bool ok, const std::string& msg) {
  if (!ok) throw RuntimeError(msg);
}

}  // namespace mvgrl
