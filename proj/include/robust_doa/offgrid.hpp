#pragma once

// Off-grid refinement. Starting from on-grid picks, alternate a least-squares
// amplitude estimate with a first-order Taylor correction of the angles:
//
//   min_delta || H - B(theta) diag(delta) X ||_F^2,   H = Y - O - A(theta) X
//
// which is the real quadratic delta^T Re(G) delta - 2 Re(z)^T delta with
// G = (B^H B) .* (X X^H)^T and z = diag(X H^H B).

#include "robust_doa/array_model.hpp"
#include "robust_doa/peaks.hpp"
#include "robust_doa/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace robust_doa {

struct OnGridPicks {
  std::vector<std::size_t> grid_indices;
  std::vector<double> angles_deg;
  std::vector<double> row_norms;
};

namespace detail {

inline std::vector<double> row_norms(const ComplexMatrix& x) {
  std::vector<double> norms(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) norms[static_cast<std::size_t>(i)] = x.row(i).norm();
  return norms;
}

inline void check_pick_args(const ComplexMatrix& x, const AngleGrid& grid, std::size_t k) {
  if (static_cast<std::size_t>(x.rows()) != grid.size())
    throw DomainError("row count of X does not match the grid size");
  if (k == 0) throw DomainError("need at least one source to pick");
  if (k > grid.size()) throw DomainError("cannot pick more sources than grid points");
}

inline OnGridPicks make_picks(const std::vector<std::size_t>& idx, const std::vector<double>& norms,
                              const AngleGrid& grid) {
  OnGridPicks p;
  for (std::size_t i : idx) {
    p.grid_indices.push_back(i);
    p.angles_deg.push_back(grid[i]);
    p.row_norms.push_back(norms[i]);
  }
  return p;
}

}  // namespace detail

/// The k rows of X with the largest l2 norm, largest first; ties go to the
/// lower index. With X = 0 this returns the first k grid points.
inline OnGridPicks pick_on_grid(const ComplexMatrix& x, const AngleGrid& grid, std::size_t k) {
  detail::check_pick_args(x, grid, k);
  const auto norms = detail::row_norms(x);
  return detail::make_picks(top_k_indices(norms, k), norms, grid);
}

/// Like pick_on_grid but restricted to local maxima of the row-norm profile.
/// A source between two grid points lights up both neighbours; taking plain
/// top-k rows can then spend two picks on one source.
inline OnGridPicks pick_peaks(const ComplexMatrix& x, const AngleGrid& grid, std::size_t k) {
  detail::check_pick_args(x, grid, k);
  const auto norms = detail::row_norms(x);
  return detail::make_picks(top_k_peaks(norms, k), norms, grid);
}

/// Taylor step for the off-grid gap, in radians. Solves Re(G) delta = Re(z);
/// falls back to a small ridge when Re(G) is ill-conditioned.
inline std::vector<double> solve_gap(const ComplexMatrix& y, const ComplexMatrix& o_tilde,
                                     std::span<const double> theta_deg, const ComplexMatrix& x_hat,
                                     const ArrayGeometry& geometry) {
  const auto k = static_cast<Eigen::Index>(theta_deg.size());
  if (k == 0) throw DomainError("solve_gap needs at least one angle");
  if (x_hat.rows() != k || x_hat.cols() != y.cols())
    throw DomainError("X_hat must be K x T");
  if (y.rows() != geometry.num_elements || o_tilde.rows() != y.rows() ||
      o_tilde.cols() != y.cols())
    throw DomainError("Y and O_tilde must be M x T");

  const ComplexMatrix a = steering_matrix(geometry, theta_deg);
  const ComplexMatrix b = steering_derivative(geometry, theta_deg);
  const ComplexMatrix h = y - o_tilde - a * x_hat;
  const ComplexMatrix g = (b.adjoint() * b).cwiseProduct((x_hat * x_hat.adjoint()).transpose());
  const ComplexVector z = (x_hat * h.adjoint() * b).diagonal();

  RealMatrix g_re = g.real();
  const RealVector z_re = z.real();

  constexpr double kMaxCondition = 1e12;
  auto condition = [](const RealMatrix& m) {
    const RealVector sv = Eigen::JacobiSVD<RealMatrix>(m).singularValues();
    const double smin = sv(sv.size() - 1);
    return smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  };

  if (!g_re.allFinite() || !z_re.allFinite()) throw RefinementError("non-finite gap system");
  if (condition(g_re) > kMaxCondition) {
    const double ridge = 1e-8 * g_re.trace() / static_cast<double>(k);
    if (!(ridge > 0.0)) throw RefinementError("gap system is singular");
    g_re.diagonal().array() += ridge;
    if (condition(g_re) > kMaxCondition) throw RefinementError("gap system is singular");
  }

  const RealVector delta = g_re.ldlt().solve(z_re);
  if (!delta.allFinite()) throw RefinementError("gap solve produced non-finite values");
  return {delta.data(), delta.data() + delta.size()};
}

struct RefineOptions {
  double tol = 1e-4;
  int max_iters = 50;
  /// Per-iteration cap on |delta_k| in degrees; half the grid spacing is the
  /// usual choice. Unset disables the cap.
  std::optional<double> max_step_deg;
  /// Angles are kept inside +-this bound, in degrees.
  double angle_limit_deg = 89.9;
  /// A step this small (radians, l2) means the Taylor iteration has reached
  /// its fixed point.
  double stationary_step = 1e-12;
};

struct RefineResult {
  std::vector<double> doas_deg;
  /// Final angle minus the on-grid pick, in degrees.
  std::vector<double> gaps_deg;
  int iterations = 0;
  bool converged = false;
  /// Angles after each iteration.
  std::vector<std::vector<double>> history_deg;
};

/// Least-squares amplitudes A(theta)^+ (Y - O_tilde); rejects a rank-deficient
/// steering matrix.
inline ComplexMatrix least_squares_amplitudes(const ComplexMatrix& y, const ComplexMatrix& o_tilde,
                                              std::span<const double> theta_deg,
                                              const ArrayGeometry& geometry) {
  const ComplexMatrix a = steering_matrix(geometry, theta_deg);
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) throw RefinementError("steering matrix is rank-deficient");
  return qr.solve(y - o_tilde);
}

inline RefineResult refine(const ComplexMatrix& y, const ComplexMatrix& o_tilde,
                           const OnGridPicks& picks, const ArrayGeometry& geometry,
                           const RefineOptions& opts = {}) {
  if (picks.angles_deg.empty()) throw DomainError("refine needs at least one pick");
  if (!(opts.tol > 0.0) || opts.max_iters < 1) throw DomainError("invalid refine options");
  const std::size_t k = picks.angles_deg.size();
  const double limit = opts.angle_limit_deg;

  std::vector<double> theta(k);
  for (std::size_t i = 0; i < k; ++i) theta[i] = std::clamp(picks.angles_deg[i], -limit, limit);

  RefineResult out;
  RealVector prev_delta = RealVector::Zero(static_cast<Eigen::Index>(k));
  for (int l = 0; l < opts.max_iters; ++l) {
    const ComplexMatrix x_hat = least_squares_amplitudes(y, o_tilde, theta, geometry);
    const std::vector<double> step = solve_gap(y, o_tilde, theta, x_hat, geometry);

    RealVector delta(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      double d = step[i];
      if (opts.max_step_deg) {
        const double cap = deg_to_rad(*opts.max_step_deg);
        d = std::clamp(d, -cap, cap);
      }
      delta(static_cast<Eigen::Index>(i)) = d;
      theta[i] = std::clamp(theta[i] + rad_to_deg(d), -limit, limit);
    }
    out.history_deg.push_back(theta);
    out.iterations = l + 1;

    const double prev_norm = prev_delta.norm();
    const double change =
        l == 0 || prev_norm == 0.0 ? delta.norm() : (delta - prev_delta).norm() / prev_norm;
    if (change < opts.tol || delta.norm() <= opts.stationary_step) {
      out.converged = true;
      break;
    }
    prev_delta = delta;
  }

  out.doas_deg = theta;
  out.gaps_deg.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.gaps_deg[i] = theta[i] - picks.angles_deg[i];
  return out;
}

}  // namespace robust_doa
