#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace robust_doa {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Raised when an argument violates an operation's precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A non-finite value appeared in an ADMM iterate.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int iteration)
      : std::runtime_error("ADMM iterate became non-finite at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// The off-grid refinement could not form a well-posed system; callers
/// should fall back to the on-grid angles.
class RefinementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

}  // namespace robust_doa
