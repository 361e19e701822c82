#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace dyncomm {

inline constexpr const char* kVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseSnapshot = Eigen::SparseMatrix<double>;

// Message-mode adjacency entries are clipped to 1 - kClipEps so that
// -log(I - aA) stays in the valid regime for a <= 1.
inline constexpr double kClipEps = 1e-6;

enum class Mode { Call, Message };

inline const char* to_string(Mode m) { return m == Mode::Call ? "call" : "message"; }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (CSV rows, headers, bad field values). CLI exit code 2.
struct ParseError : Error {
  using Error::Error;
};

// Violated preconditions or parameter ranges. CLI exit code 3.
struct ValidationError : Error {
  using Error::Error;
};

// An operation was asked of the wrong adjacency mode. CLI exit code 3.
struct UnsupportedModeError : ValidationError {
  using ValidationError::ValidationError;
};

// Integrator failures: step underflow, max_steps, invariant violations. Exit code 4.
struct IntegrationError : Error {
  using Error::Error;
};

// a: edge attenuation, b: temporal decay rate [1/s], p: order of the truncated
// series for -log(I - aA), c: message-edge decay rate [1/s] (Message mode only).
struct Params {
  double a = 1e-4;
  double b = 1.0 / 86400.0;
  int p = 5;
  double c = 1.0 / 3600.0;

  void validate() const {
    if (!(a > 0)) throw ValidationError("params: attenuation a must be > 0");
    if (!(b >= 0)) throw ValidationError("params: temporal decay b must be >= 0");
    if (p < 1) throw ValidationError("params: series order p must be >= 1");
    if (!(c > 0)) throw ValidationError("params: message decay rate c must be > 0");
  }
};

}  // namespace dyncomm
