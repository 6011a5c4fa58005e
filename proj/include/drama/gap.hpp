#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace drama {

/// An empty interval between two consecutive sorted samples.
struct Gap {
  double low = 0;
  double high = 0;
  /// Number of samples at or below `low`.
  std::size_t split = 0;

  double width() const { return high - low; }
  double midpoint() const { return low + (high - low) / 2; }
};

/// Widest gap in `sorted` (ascending), accepted only when it is at least
/// 2 x granularity wide and at least as wide as the interquartile range of the
/// samples on either side of it. A tail gap inside one cluster fails the second
/// test; the gap between two clusters passes it.
std::optional<Gap> widest_separating_gap(std::span<const double> sorted, double granularity);

/// (bin lower edge, count) pairs, ascending. Bins are aligned to multiples of `bin_width`.
std::map<double, std::uint64_t> histogram(std::span<const double> values, double bin_width);

}  // namespace drama
