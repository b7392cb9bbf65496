// types.hpp - scalar/matrix aliases and the error type shared by every module
#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace msqgt {

using cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// A point in a parameter chart.
using Point = std::vector<double>;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorKind {
  NotSquare,
  NotHermitian,
  TraceNotOne,
  NotPSD,
  NotNormalized,
  DimensionMismatch,
  RankDeficient,
  DegenerateSpectrum,
  NonHermitianDerivative,
  NotUnitary,
  AngleOutOfRange,
  NotClosed,
  CoarseGrid,
  InconsistentStencil,
  OutOfDomain,
  NoAnalyticDerivatives,
  SchemaError,
  InvalidDensityAtNode,
  NotQubit,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::TraceNotOne: return "TraceNotOne";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::NonHermitianDerivative: return "NonHermitianDerivative";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorKind::NotClosed: return "NotClosed";
    case ErrorKind::CoarseGrid: return "CoarseGrid";
    case ErrorKind::InconsistentStencil: return "InconsistentStencil";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NoAnalyticDerivatives: return "NoAnalyticDerivatives";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvalidDensityAtNode: return "InvalidDensityAtNode";
    case ErrorKind::NotQubit: return "NotQubit";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure in the toolkit is reported through this type. `magnitude`
/// carries the measured violation (eigenvalue, residual, angle, ...) when one
/// exists, NaN otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double magnitude = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), magnitude_(magnitude) {}

  ErrorKind kind() const noexcept { return kind_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  ErrorKind kind_;
  double magnitude_;
};

namespace detail {
template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << args);
  return os.str();
}
}  // namespace detail

}  // namespace msqgt
