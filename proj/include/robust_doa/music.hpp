#pragma once

// Spectral MUSIC on the same grid, kept as a sanity comparator for the
// sparse pipeline. It uses the plain sample covariance, so it has no defence
// against outliers or coherent sources.

#include "robust_doa/array_model.hpp"
#include "robust_doa/peaks.hpp"
#include "robust_doa/types.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace robust_doa {

/// MUSIC pseudo-spectrum 1 / ||E_n^H a(theta)||^2 over the grid.
inline std::vector<double> music_spectrum(const ComplexMatrix& y, const AngleGrid& grid,
                                          std::size_t k, const ArrayGeometry& geometry) {
  const auto m = static_cast<std::size_t>(geometry.num_elements);
  if (k == 0 || k >= m) throw DomainError("MUSIC needs 1 <= K < M");
  if (y.rows() != geometry.num_elements || y.cols() < 1)
    throw DomainError("data must have M rows and at least one snapshot");

  const ComplexMatrix cov = y * y.adjoint() / static_cast<double>(y.cols());
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(cov);
  // Eigenvalues ascend, so the noise subspace is the leading M - K columns.
  const ComplexMatrix noise = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(m - k));

  std::vector<double> spectrum(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double proj = (noise.adjoint() * steering_vector(geometry, grid[i])).squaredNorm();
    spectrum[i] = 1.0 / std::max(proj, 1e-300);
  }
  return spectrum;
}

/// Grid angles of the K largest spectrum peaks, strongest first.
inline std::vector<double> music_baseline(const ComplexMatrix& y, const AngleGrid& grid,
                                          std::size_t k, const ArrayGeometry& geometry) {
  const auto spectrum = music_spectrum(y, grid, k, geometry);
  std::vector<double> out;
  for (std::size_t i : top_k_peaks(spectrum, k)) out.push_back(grid[i]);
  return out;
}

}  // namespace robust_doa
