#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drama/dram_state.hpp"
#include "drama/timing_reveng.hpp"

namespace drama {

/// Partition of the latency axis: [0, cache_hit_max] cache hit,
/// (cache_hit_max, row_hit_max] row hit, above that row conflict.
struct LatencyThresholds {
  double cache_hit_max = 0;
  double row_hit_max = 0;
};

/// Places both thresholds in the two widest separating gaps of unlabeled
/// samples: the widest overall, then the widest inside either half.
/// Throws NoGapFound when fewer than three modes are separable.
LatencyThresholds fit_thresholds(std::span<const double> samples, double granularity = 1.0);

struct LabeledLatency {
  double cycles = 0;
  AccessClass truth = AccessClass::CacheHit;
};

/// Supervised variant: each threshold minimises misclassifications between
/// the two adjacent classes. Throws NoGapFound if a class is missing.
LatencyThresholds fit_thresholds(std::span<const LabeledLatency> samples);

AccessClass classify_latency(double cycles, const LatencyThresholds &th);

/// `count` samples of each class drawn from `state` with addresses it picks
/// itself (cached reads, same-row re-reads, and same-bank different-row pairs).
std::vector<LabeledLatency> sample_three_classes(DramState &state, std::size_t count, std::uint64_t seed);

/// Thresholds fitted from a fresh three-class sample of `state`.
LatencyThresholds calibrate_thresholds(DramState &state, std::uint64_t seed, std::size_t count = 4096);

struct SameBankProbability {
  double exact = 0;
  std::optional<double> estimate;
  std::uint64_t trials = 0;
  /// Binomial standard deviation of the estimate around `exact`.
  double sigma = 0;
};

/// exact = 2^-B; the estimate draws `mc_trials` random pairs from [0, 2^30).
SameBankProbability same_bank_probability(const DramConfig &config, std::optional<std::uint64_t> mc_trials,
                                          std::uint64_t seed);

struct HammerTriple {
  PhysAddr lower = 0;
  std::uint64_t victim_row = 0;
  PhysAddr upper = 0;
  BankCoordinate bank;
};

/// Aggressor pairs (rows n-1 and n+1 of one bank) inside `region`, one triple per
/// (bank, n), choosing the lowest address of each aggressor row. Ordered by
/// bank, then victim row. Throws NoPairsFound.
std::vector<HammerTriple> find_double_sided_pairs(const DramConfig &config, AddressRegion region,
                                                  std::optional<std::uint64_t> target_row = std::nullopt);

}  // namespace drama
