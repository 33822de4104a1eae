#pragma once

// Scalar and row-wise proximal kernels: the minimax logarithmic concave (MLC)
// penalty, its variational weight, the prox of mu*log(|x| + eta), and the
// l2,1 row soft-threshold.

#include "robust_doa/types.hpp"

#include <algorithm>
#include <cmath>

namespace robust_doa {

struct MlcParams {
  double lam = 1.0;
  double gamma = 2.0;
  double eta = 0.5;

  void validate() const {
    if (!(lam > 0.0) || !(gamma > 0.0) || !(eta > 0.0))
      throw DomainError("MLC parameters lam, gamma, eta must be positive");
  }

  /// |x| at and beyond which the penalty is flat: eta * (e^{gamma*lam} - 1).
  double saturation_point() const { return eta * std::expm1(gamma * lam); }

  /// gamma * lam^2 / 2, the value of the penalty once saturated.
  double ceiling() const { return 0.5 * gamma * lam * lam; }
};

inline double mlc_value(const MlcParams& p, Complex x) {
  const double mag = std::abs(x);
  if (mag > p.saturation_point()) return p.ceiling();
  const double r = std::log1p(mag / p.eta);
  return p.lam * r - r * r / (2.0 * p.gamma);
}

/// Minimizer over w >= 0 of w*log(|x|/eta + 1) + (gamma/2)(w - lam)^2.
inline double variational_weight(const MlcParams& p, Complex x) {
  const double r = std::log1p(std::abs(x) / p.eta);
  return std::max(p.lam - r / p.gamma, 0.0);
}

/// Global minimizer of mu*log(|x| + eta) + |x - c|^2 / 2.
///
/// The minimizer keeps the phase of c. Its magnitude is 0 or the larger
/// stationary point ((|c| - eta) + sqrt((|c| + eta)^2 - 4 mu)) / 2, whichever
/// has the lower objective; ties go to 0. The stationary point exists only
/// when |c| >= 2 sqrt(mu) - eta.
inline Complex log_prox(double mu, double eta, Complex c) {
  const double mag = std::abs(c);
  if (mag == 0.0) return {0.0, 0.0};
  const double disc = (mag + eta) * (mag + eta) - 4.0 * mu;
  if (disc < 0.0) return {0.0, 0.0};
  const double alpha = 0.5 * ((mag - eta) + std::sqrt(disc));
  if (alpha <= 0.0) return {0.0, 0.0};
  // log(alpha + eta) - log(eta) = log1p(alpha / eta); the common constant is dropped.
  const double at_alpha = mu * std::log1p(alpha / eta) + 0.5 * (alpha - mag) * (alpha - mag);
  const double at_zero = 0.5 * mag * mag;
  if (!(at_alpha < at_zero)) return {0.0, 0.0};
  return c * (alpha / mag);
}

/// One reweighting step of the MLC prox: the weight is evaluated at x_prev.
/// A vanishing weight means the penalty is saturated and c passes through.
inline Complex mlc_prox(const MlcParams& p, double mu, Complex c, Complex x_prev) {
  const double w = variational_weight(p, x_prev);
  if (w == 0.0) return c;
  return log_prox(mu * w, p.eta, c);
}

/// Alternates weight and prox until the iterate stops moving, starting from
/// x_init. Used when the weight is meant to be consistent with the output.
inline Complex mlc_prox_fixed_point(const MlcParams& p, double mu, Complex c, Complex x_init,
                                    int max_inner = 50) {
  Complex x = x_init;
  for (int i = 0; i < max_inner; ++i) {
    const Complex next = mlc_prox(p, mu, c, x);
    if (next == x) break;
    x = next;
  }
  return x;
}

/// argmin_X tau*||X||_{2,1} + ||X - C||_F^2 / 2, solved row by row.
inline ComplexMatrix row_soft_threshold(const ComplexMatrix& c, double tau) {
  if (tau < 0.0) throw DomainError("row_soft_threshold needs tau >= 0");
  ComplexMatrix out(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double norm = c.row(i).norm();
    if (norm > 0.0 && norm >= tau)
      out.row(i) = c.row(i) * ((norm - tau) / norm);
    else
      out.row(i).setZero();
  }
  return out;
}

}  // namespace robust_doa
