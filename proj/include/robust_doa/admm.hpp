#pragma once

// Linearized ADMM for
//
//   min_{X,W,O}  ||W||_F^2 / 2 + lambda1 ||X||_{2,1} + lambda2 sum_{m,t} phi(O_mt)
//   s.t.         A X + W + O = Y
//
// where phi is the MLC penalty. X is row-sparse (one row per grid angle), O
// holds entry-wise sparse outliers and W the Gaussian residual.

#include "robust_doa/prox.hpp"
#include "robust_doa/types.hpp"

#include <cmath>
#include <vector>

namespace robust_doa {

/// Where the MLC variational weight is evaluated in the O update.
enum class WeightAnchor {
  kPreviousIterate,  ///< w* taken at O^l (one reweighting per iteration)
  kFixedPoint,       ///< w* and O^{l+1} iterated to mutual consistency
};

struct AdmmConfig {
  double lambda1 = 7.0;
  double lambda2 = 1.4;
  double rho = 3.0;
  double beta = 0.03;
  MlcParams mlc{};
  double tol = 1e-4;
  int max_iters = 5000;
  WeightAnchor anchor = WeightAnchor::kPreviousIterate;

  void validate() const {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(rho > 0.0) || !(beta > 0.0) || !(tol > 0.0))
      throw DomainError("ADMM lambda1, lambda2, rho, beta and tol must be positive");
    if (max_iters < 1) throw DomainError("ADMM max_iters must be positive");
    mlc.validate();
  }

  /// (lambda1, lambda2) = (7, 1.4) above 5 dB SNR, (4, 4) otherwise.
  static AdmmConfig preset_for_snr(double snr_db) {
    AdmmConfig cfg;
    if (snr_db > 5.0) {
      cfg.lambda1 = 7.0;
      cfg.lambda2 = 1.4;
    } else {
      cfg.lambda1 = 4.0;
      cfg.lambda2 = 4.0;
    }
    return cfg;
  }
};

/// Iterate of the solver. AX caches A * X and must be refreshed through
/// set_X whenever X changes.
struct AdmmState {
  ComplexMatrix X;
  ComplexMatrix O;
  ComplexMatrix W;
  ComplexMatrix U;
  ComplexMatrix AX;
  int iter = 0;

  /// X = A^H Y, O = Y, W = U = 0.
  static AdmmState initial(const ComplexMatrix& a, const ComplexMatrix& y) {
    AdmmState s;
    s.set_X(a, a.adjoint() * y);
    s.O = y;
    s.W = ComplexMatrix::Zero(y.rows(), y.cols());
    s.U = ComplexMatrix::Zero(y.rows(), y.cols());
    return s;
  }

  void set_X(const ComplexMatrix& a, ComplexMatrix x) {
    X = std::move(x);
    // X is row-sparse after the first few iterations; skip the zero rows.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (!X.row(i).isZero(0.0)) active.push_back(i);
    if (2 * active.size() >= static_cast<std::size_t>(X.rows())) {
      AX = a * X;
    } else if (active.empty()) {
      AX = ComplexMatrix::Zero(a.rows(), X.cols());
    } else {
      AX = a(Eigen::all, active) * X(active, Eigen::all);
    }
  }
};

struct AdmmResult {
  ComplexMatrix X;
  ComplexMatrix O;
  ComplexMatrix W;
  int iterations = 0;
  bool converged = false;
  std::vector<double> rel_change_history;
  /// ||AX + W + O - Y||_F after each iteration.
  std::vector<double> feasibility_history;
};

/// Linearized X step: soft(X - beta * A^H(AX - V), lambda1 * beta / rho)
/// with V = Y + U/rho - W - O.
inline ComplexMatrix update_X(const AdmmState& s, const ComplexMatrix& a, const ComplexMatrix& y,
                              const AdmmConfig& cfg) {
  const ComplexMatrix v = y + s.U / cfg.rho - s.W - s.O;
  const ComplexMatrix grad = a.adjoint() * (s.AX - v);
  return row_soft_threshold(s.X - cfg.beta * grad, cfg.lambda1 * cfg.beta / cfg.rho);
}

/// Element-wise MLC prox of Q = Y - AX - W + U/rho with mu = lambda2 / rho.
/// Expects X (and AX) already advanced.
inline ComplexMatrix update_O(const AdmmState& s, const ComplexMatrix& /*a*/,
                              const ComplexMatrix& y, const AdmmConfig& cfg) {
  const ComplexMatrix q = y - s.AX - s.W + s.U / cfg.rho;
  const double mu = cfg.lambda2 / cfg.rho;
  ComplexMatrix out(q.rows(), q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      out(i, j) = cfg.anchor == WeightAnchor::kPreviousIterate
                      ? mlc_prox(cfg.mlc, mu, q(i, j), s.O(i, j))
                      : mlc_prox_fixed_point(cfg.mlc, mu, q(i, j), s.O(i, j));
    }
  return out;
}

/// Closed-form W step. Expects X and O already advanced.
inline ComplexMatrix update_W(const AdmmState& s, const ComplexMatrix& /*a*/,
                              const ComplexMatrix& y, const AdmmConfig& cfg) {
  return -(cfg.rho / (cfg.rho + 1.0)) * (s.AX + s.O - y - s.U / cfg.rho);
}

/// Dual ascent. Expects X, O and W already advanced.
inline ComplexMatrix update_U(const AdmmState& s, const ComplexMatrix& /*a*/,
                              const ComplexMatrix& y, const AdmmConfig& cfg) {
  return s.U - cfg.rho * (s.AX + s.W + s.O - y);
}

/// Runs the X -> O -> W -> U recursion from X = A^H Y, O = Y, W = U = 0 until
/// ||X^{l+1} - X^l||_F / ||X^l||_F < tol (absolute change when X^l = 0) or
/// max_iters is reached.
inline AdmmResult solve(const ComplexMatrix& a, const ComplexMatrix& y, const AdmmConfig& cfg) {
  cfg.validate();
  if (a.rows() < 2) throw DomainError("dictionary needs at least 2 rows");
  if (a.cols() < 1 || y.cols() < 1) throw DomainError("dictionary and data must be non-empty");
  if (a.rows() != y.rows())
    throw DomainError("dictionary and data row counts differ");
  if (!all_finite(a) || !all_finite(y)) throw DomainError("dictionary and data must be finite");

  AdmmState s = AdmmState::initial(a, y);
  AdmmResult result;
  result.rel_change_history.reserve(static_cast<std::size_t>(cfg.max_iters));
  result.feasibility_history.reserve(static_cast<std::size_t>(cfg.max_iters));

  for (int l = 1; l <= cfg.max_iters; ++l) {
    ComplexMatrix x_next = update_X(s, a, y, cfg);
    const double prev_norm = s.X.norm();
    const double change = (x_next - s.X).norm();
    const double rel = prev_norm > 0.0 ? change / prev_norm : change;

    s.set_X(a, std::move(x_next));
    s.O = update_O(s, a, y, cfg);
    s.W = update_W(s, a, y, cfg);
    s.U = update_U(s, a, y, cfg);
    s.iter = l;

    if (!all_finite(s.X) || !all_finite(s.O) || !all_finite(s.W) || !all_finite(s.U) ||
        !std::isfinite(rel))
      throw DivergenceError(l);

    result.rel_change_history.push_back(rel);
    result.feasibility_history.push_back((s.AX + s.W + s.O - y).norm());
    if (rel < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  result.iterations = s.iter;
  result.X = std::move(s.X);
  result.O = std::move(s.O);
  result.W = std::move(s.W);
  return result;
}

}  // namespace robust_doa
