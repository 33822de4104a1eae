#pragma once

// Uniform linear array model: steering vectors, their angle derivatives, the
// gridded dictionary, and Monte Carlo snapshot synthesis under
// Gaussian-plus-sparse-outlier noise.

#include "robust_doa/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace robust_doa {

struct ArrayGeometry {
  int num_elements = 10;
  double element_spacing_over_wavelength = 0.5;

  void validate() const {
    if (num_elements < 2) throw DomainError("array needs at least 2 elements");
    if (!(element_spacing_over_wavelength > 0.0))
      throw DomainError("element spacing must be positive");
  }
};

/// Equidistant angles covering [-90, 90] degrees, both endpoints included.
class AngleGrid {
 public:
  static AngleGrid uniform(double spacing_deg) {
    if (!(spacing_deg > 0.0) || spacing_deg > 180.0)
      throw DomainError("grid spacing must be in (0, 180] degrees");
    const double cells = 180.0 / spacing_deg;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * cells)
      throw DomainError("grid spacing must divide 180 degrees");
    const auto n = static_cast<std::size_t>(rounded) + 1;
    std::vector<double> angles(n);
    for (std::size_t i = 0; i < n; ++i)
      angles[i] = -90.0 + static_cast<double>(i) * spacing_deg;
    angles.back() = 90.0;
    return AngleGrid(std::move(angles), spacing_deg);
  }

  std::span<const double> angles_deg() const noexcept { return angles_; }
  double spacing_deg() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return angles_.size(); }
  double operator[](std::size_t i) const { return angles_.at(i); }

 private:
  AngleGrid(std::vector<double> angles, double spacing)
      : angles_(std::move(angles)), spacing_(spacing) {}

  std::vector<double> angles_;
  double spacing_;
};

/// Everything needed to generate one simulated trial.
struct ArrayScenario {
  ArrayGeometry geometry;
  std::vector<double> true_doas_deg;
  int num_snapshots = 30;
  /// +infinity disables the Gaussian noise.
  double snr_db = 10.0;
  /// +infinity disables the outlier values.
  double sor_db = -20.0;
  double outlier_prob = 0.1;
  bool coherent = false;
  std::uint64_t rng_seed = 0;

  std::size_t num_sources() const noexcept { return true_doas_deg.size(); }

  double noise_variance() const { return std::pow(10.0, -snr_db / 10.0); }
  double outlier_variance() const { return std::pow(10.0, -sor_db / 10.0); }

  void validate() const {
    geometry.validate();
    if (true_doas_deg.empty()) throw DomainError("scenario needs at least one source");
    for (std::size_t i = 0; i < true_doas_deg.size(); ++i) {
      const double a = true_doas_deg[i];
      if (!(a > -90.0 && a < 90.0))
        throw DomainError("true DOAs must lie strictly inside (-90, 90) degrees");
      for (std::size_t j = 0; j < i; ++j)
        if (true_doas_deg[j] == a) throw DomainError("true DOAs must be distinct");
    }
    if (num_snapshots < 1) throw DomainError("num_snapshots must be positive");
    if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0))
      throw DomainError("outlier_prob must lie in [0, 1]");
    if (std::isnan(snr_db) || std::isnan(sor_db))
      throw DomainError("SNR and SOR must not be NaN");
  }
};

/// observations = clean_signal + gaussian_noise + outliers.
struct SnapshotData {
  ComplexMatrix observations;
  ComplexMatrix clean_signal;
  ComplexMatrix gaussian_noise;
  ComplexMatrix outliers;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> outlier_mask;
};

namespace detail {

inline void check_angle(double angle_deg) {
  if (!(angle_deg >= -90.0 && angle_deg <= 90.0))
    throw DomainError("angle outside [-90, 90] degrees");
}

inline double phase_step(const ArrayGeometry& g, double angle_deg) {
  return 2.0 * kPi * g.element_spacing_over_wavelength * std::sin(deg_to_rad(angle_deg));
}

}  // namespace detail

/// a(theta)[m] = exp(-j 2 pi (d/lambda) m sin(theta)), m = 0..M-1.
inline ComplexVector steering_vector(const ArrayGeometry& geometry, double angle_deg) {
  geometry.validate();
  detail::check_angle(angle_deg);
  const double step = detail::phase_step(geometry, angle_deg);
  ComplexVector a(geometry.num_elements);
  a(0) = Complex(1.0, 0.0);
  for (int m = 1; m < geometry.num_elements; ++m)
    a(m) = std::polar(1.0, -step * static_cast<double>(m));
  return a;
}

inline ComplexMatrix steering_matrix(const ArrayGeometry& geometry,
                                     std::span<const double> angles_deg) {
  if (angles_deg.empty()) throw DomainError("steering_matrix needs at least one angle");
  ComplexMatrix a(geometry.num_elements, static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t k = 0; k < angles_deg.size(); ++k)
    a.col(static_cast<Eigen::Index>(k)) = steering_vector(geometry, angles_deg[k]);
  return a;
}

/// Column k is d a(theta_k) / d theta_k with theta in radians. Rejects +-90
/// degrees, where cos(theta) vanishes and the derivative carries no direction.
inline ComplexMatrix steering_derivative(const ArrayGeometry& geometry,
                                         std::span<const double> angles_deg) {
  if (angles_deg.empty()) throw DomainError("steering_derivative needs at least one angle");
  geometry.validate();
  ComplexMatrix b(geometry.num_elements, static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t k = 0; k < angles_deg.size(); ++k) {
    const double deg = angles_deg[k];
    if (!(deg > -90.0 && deg < 90.0))
      throw DomainError("steering_derivative requires angles strictly inside (-90, 90)");
    const double theta = deg_to_rad(deg);
    const double scale = 2.0 * kPi * geometry.element_spacing_over_wavelength;
    for (int m = 0; m < geometry.num_elements; ++m) {
      const double md = static_cast<double>(m);
      const Complex factor(0.0, -scale * md * std::cos(theta));
      b(m, static_cast<Eigen::Index>(k)) = factor * std::polar(1.0, -scale * md * std::sin(theta));
    }
  }
  return b;
}

/// Grid dictionary with unit-norm columns a(theta)/sqrt(M). The ADMM step
/// size 0.03 majorizes the data term only when lambda_max(A^H A) <= 1/0.03,
/// which holds for this scaling (about 25.6 for M=10, r=2) but not for the
/// raw steering matrix (about 256).
inline ComplexMatrix grid_dictionary(const ArrayGeometry& geometry, const AngleGrid& grid) {
  return steering_matrix(geometry, grid.angles_deg()) /
         std::sqrt(static_cast<double>(geometry.num_elements));
}

/// splitmix64 finalizer; used to derive independent per-trial streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t axis_index,
                                    std::uint64_t trial_index) noexcept {
  return mix_seed(mix_seed(mix_seed(master) ^ axis_index) ^ trial_index);
}

namespace detail {

// Circularly-symmetric complex Gaussian, variance split equally between the
// real and imaginary parts.
inline Complex complex_gaussian(std::mt19937_64& rng, std::normal_distribution<double>& n01,
                                double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {s * re, s * im};
}

}  // namespace detail

/// Draws one trial. Draw order is fixed (source phases, Gaussian noise,
/// outlier mask, outlier values) so a seed reproduces the data bit-for-bit.
inline SnapshotData synthesize(const ArrayScenario& scenario) {
  scenario.validate();
  const int m_count = scenario.geometry.num_elements;
  const int t_count = scenario.num_snapshots;
  const auto k_count = static_cast<Eigen::Index>(scenario.num_sources());

  std::mt19937_64 rng(scenario.rng_seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);

  ComplexMatrix sources(k_count, t_count);
  if (scenario.coherent) {
    // One shared phase sequence; each source carries a fixed unit-modulus gain.
    ComplexVector gains(k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) gains(k) = std::polar(1.0, phase(rng));
    for (int t = 0; t < t_count; ++t) {
      const Complex common = std::polar(1.0, phase(rng));
      for (Eigen::Index k = 0; k < k_count; ++k) sources(k, t) = gains(k) * common;
    }
  } else {
    for (int t = 0; t < t_count; ++t)
      for (Eigen::Index k = 0; k < k_count; ++k) sources(k, t) = std::polar(1.0, phase(rng));
  }

  SnapshotData out;
  out.clean_signal = steering_matrix(scenario.geometry, scenario.true_doas_deg) * sources;

  const double noise_var = scenario.noise_variance();
  out.gaussian_noise.resize(m_count, t_count);
  for (int t = 0; t < t_count; ++t)
    for (int m = 0; m < m_count; ++m)
      out.gaussian_noise(m, t) = detail::complex_gaussian(rng, n01, noise_var);

  out.outlier_mask.resize(m_count, t_count);
  for (int t = 0; t < t_count; ++t)
    for (int m = 0; m < m_count; ++m) out.outlier_mask(m, t) = unit(rng) < scenario.outlier_prob;

  const double outlier_var = scenario.outlier_variance();
  out.outliers = ComplexMatrix::Zero(m_count, t_count);
  for (int t = 0; t < t_count; ++t)
    for (int m = 0; m < m_count; ++m) {
      const Complex v = detail::complex_gaussian(rng, n01, outlier_var);
      if (out.outlier_mask(m, t)) out.outliers(m, t) = v;
    }

  out.observations = out.clean_signal + out.gaussian_noise + out.outliers;
  return out;
}

}  // namespace robust_doa
