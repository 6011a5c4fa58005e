#include <cmath>

#include "drama/gap.hpp"

namespace drama {

namespace {

double iqr(std::span<const double> sorted) {
  if (sorted.size() < 2) return 0.0;
  const std::size_t n = sorted.size();
  return sorted[(3 * (n - 1)) / 4] - sorted[(n - 1) / 4];
}

}  // namespace

std::optional<Gap> widest_separating_gap(std::span<const double> sorted, double granularity) {
  if (sorted.size() < 2) return std::nullopt;
  Gap best;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double w = sorted[i] - sorted[i - 1];
    if (w > best.width()) best = Gap{sorted[i - 1], sorted[i], i};
  }
  if (best.width() < 2 * granularity) return std::nullopt;
  if (best.width() < iqr(sorted.first(best.split))) return std::nullopt;
  if (best.width() < iqr(sorted.subspan(best.split))) return std::nullopt;
  return best;
}

std::map<double, std::uint64_t> histogram(std::span<const double> values, double bin_width) {
  std::map<double, std::uint64_t> out;
  for (double v : values) out[std::floor(v / bin_width) * bin_width] += 1;
  return out;
}

}  // namespace drama
