#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace robust_doa {

/// Indices of the k largest entries, ties broken toward the lower index.
inline std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

/// Indices of the k largest local maxima of a 1-D profile, largest first.
/// A local maximum is strictly positive, >= its left neighbour and > its
/// right neighbour (so a flat top reports its right end). When fewer than k
/// maxima exist the remainder is filled with the largest remaining entries.
inline std::vector<std::size_t> top_k_peaks(std::span<const double> values, std::size_t k) {
  const std::size_t n = values.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = values[i];
    if (!(v > 0.0)) continue;
    const bool left_ok = i == 0 || v >= values[i - 1];
    const bool right_ok = i + 1 == n || v > values[i + 1];
    if (left_ok && right_ok) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  if (peaks.size() >= k) {
    peaks.resize(k);
    return peaks;
  }
  for (std::size_t idx : top_k_indices(values, n)) {
    if (peaks.size() == k) break;
    if (std::find(peaks.begin(), peaks.end(), idx) == peaks.end()) peaks.push_back(idx);
  }
  return peaks;
}

}  // namespace robust_doa
