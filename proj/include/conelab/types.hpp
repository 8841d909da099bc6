#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace conelab {

using cplx = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

// c5 = (15/4)^{3/4}, the ODE blowup amplitude.
inline double c5() {
  static const double v = std::pow(15.0 / 4.0, 0.75);
  return v;
}

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a computation hits a structurally degenerate parameter
// (Gamma pole, W(lambda) = 0, logarithmic hypergeometric case, ...).
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

}  // namespace conelab
