#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "drama/attack_utils.hpp"
#include "drama/error.hpp"
#include "drama/gap.hpp"

namespace drama {

LatencyThresholds fit_thresholds(std::span<const double> samples, double granularity) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  // The first split leaves two modes on one side, so the interquartile test of
  // widest_separating_gap does not apply yet; it guards the second split.
  std::optional<Gap> first;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double w = sorted[i] - sorted[i - 1];
    if (w >= 2 * granularity && (!first || w > first->width())) first = Gap{sorted[i - 1], sorted[i], i};
  }
  if (!first) throw Error(ErrorKind::NoGapFound, "latency samples show a single mode");

  const std::span<const double> all(sorted);
  auto low = widest_separating_gap(all.first(first->split), granularity);
  auto high = widest_separating_gap(all.subspan(first->split), granularity);
  if (low && high) {
    if (low->width() >= high->width()) {
      high.reset();
    } else {
      low.reset();
    }
  }
  const auto second = low ? low : high;
  if (!second) throw Error(ErrorKind::NoGapFound, "latency samples show only two modes; a third boundary is missing");

  const double a = first->midpoint();
  const double b = second->midpoint();
  return LatencyThresholds{std::min(a, b), std::max(a, b)};
}

namespace {

// Threshold t minimising |{lo > t}| + |{hi <= t}|, placed midway between the
// bracketing samples.
double best_split(std::vector<double> lo, std::vector<double> hi) {
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  std::vector<double> cuts;
  std::vector<double> merged = lo;
  merged.insert(merged.end(), hi.begin(), hi.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) cuts.push_back(merged[i] + (merged[i + 1] - merged[i]) / 2);
  if (cuts.empty()) cuts.push_back(merged.front());

  double best = cuts.front();
  std::size_t best_err = std::numeric_limits<std::size_t>::max();
  for (double t : cuts) {
    const auto lo_wrong = static_cast<std::size_t>(lo.end() - std::upper_bound(lo.begin(), lo.end(), t));
    const auto hi_wrong = static_cast<std::size_t>(std::upper_bound(hi.begin(), hi.end(), t) - hi.begin());
    if (lo_wrong + hi_wrong < best_err) {
      best_err = lo_wrong + hi_wrong;
      best = t;
    }
  }
  return best;
}

}  // namespace

LatencyThresholds fit_thresholds(std::span<const LabeledLatency> samples) {
  std::vector<double> cache, hit, conflict;
  for (const auto &s : samples) {
    switch (s.truth) {
      case AccessClass::CacheHit: cache.push_back(s.cycles); break;
      case AccessClass::RowHit: hit.push_back(s.cycles); break;
      case AccessClass::RowConflict: conflict.push_back(s.cycles); break;
    }
  }
  if (cache.empty() || hit.empty() || conflict.empty()) {
    throw Error(ErrorKind::NoGapFound, "labeled samples must cover all three latency classes");
  }
  LatencyThresholds th{best_split(cache, hit), best_split(hit, conflict)};
  if (th.cache_hit_max >= th.row_hit_max) throw Error(ErrorKind::NoGapFound, "latency classes overlap");
  return th;
}

AccessClass classify_latency(double cycles, const LatencyThresholds &th) {
  if (cycles <= th.cache_hit_max) return AccessClass::CacheHit;
  if (cycles <= th.row_hit_max) return AccessClass::RowHit;
  return AccessClass::RowConflict;
}

std::vector<LabeledLatency> sample_three_classes(DramState &state, std::size_t count, std::uint64_t seed) {
  const DramConfig &config = state.config();
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);

  // A handful of (a, same-bank different-row b) pairs, reused round-robin.
  std::vector<std::pair<PhysAddr, PhysAddr>> pairs;
  while (pairs.size() < 8) {
    const PhysAddr a = line(rng) << 6;
    const auto bank = config.bank_of(a);
    const auto row = config.row_of(a);
    for (int tries = 0; tries < 1 << 20; ++tries) {
      const PhysAddr b = line(rng) << 6;
      if (config.bank_of(b) == bank && config.row_of(b) != row) {
        pairs.emplace_back(a, b);
        break;
      }
    }
  }

  std::vector<LabeledLatency> out;
  out.reserve(3 * count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto [a, b] = pairs[i % pairs.size()];
    out.push_back({static_cast<double>(state.access(a, true)), AccessClass::CacheHit});
    state.access(a);
    out.push_back({static_cast<double>(state.access(a)), AccessClass::RowHit});
    state.access(b);
    out.push_back({static_cast<double>(state.access(a)), AccessClass::RowConflict});
  }
  return out;
}

LatencyThresholds calibrate_thresholds(DramState &state, std::uint64_t seed, std::size_t count) {
  const auto labeled = sample_three_classes(state, count, seed);
  std::vector<double> raw;
  raw.reserve(labeled.size());
  for (const auto &s : labeled) raw.push_back(s.cycles);
  return fit_thresholds(raw);
}

SameBankProbability same_bank_probability(const DramConfig &config, std::optional<std::uint64_t> mc_trials,
                                          std::uint64_t seed) {
  SameBankProbability out;
  out.exact = std::ldexp(1.0, -static_cast<int>(config.bank_bits()));
  if (!mc_trials) return out;
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  std::uint64_t same = 0;
  for (std::uint64_t i = 0; i < *mc_trials; ++i) {
    const PhysAddr a = line(rng) << 6;
    const PhysAddr b = line(rng) << 6;
    same += same_bank(config, a, b) ? 1 : 0;
  }
  out.trials = *mc_trials;
  out.estimate = *mc_trials ? static_cast<double>(same) / static_cast<double>(*mc_trials) : 0.0;
  out.sigma = *mc_trials ? std::sqrt(out.exact * (1 - out.exact) / static_cast<double>(*mc_trials)) : 0.0;
  return out;
}

std::vector<HammerTriple> find_double_sided_pairs(const DramConfig &config, AddressRegion region,
                                                  std::optional<std::uint64_t> target_row) {
  // Decode granularity: no bit below the lowest referenced one changes bank or row.
  const BitMask used = config.used_bits();
  const unsigned lowest = used.empty() ? 6 : static_cast<unsigned>(std::countr_zero(used.raw()));
  const std::uint64_t step = std::uint64_t{1} << std::min(6u, lowest);
  const PhysAddr first = (region.base + step - 1) & ~(step - 1);
  if (region.end() <= first) throw Error(ErrorKind::NoPairsFound, "region holds no addressable unit");
  if ((region.end() - first) / step > (std::uint64_t{1} << 26)) {
    throw Error(ErrorKind::InvalidConfig, "region too large for an exhaustive pair search");
  }

  // (bank, row) -> lowest address; std::map keeps bank-then-row order.
  std::map<std::pair<std::uint32_t, std::uint64_t>, PhysAddr> rows;
  for (PhysAddr a = first; a < region.end(); a += step) {
    const auto key = std::make_pair(config.bank_of(a).bits, config.row_of(a));
    rows.emplace(key, a);  // first insertion is the lowest address
  }

  std::vector<HammerTriple> out;
  for (const auto &[key, lower] : rows) {
    const auto [bank, row] = key;
    const std::uint64_t victim = row + 1;
    if (target_row && *target_row != victim) continue;
    auto upper = rows.find({bank, row + 2});
    if (upper == rows.end()) continue;
    out.push_back({lower, victim, upper->second, BankCoordinate{bank, config.bank_bits()}});
  }
  if (out.empty()) throw Error(ErrorKind::NoPairsFound, "no bank has rows n-1 and n+1 inside the region");
  return out;
}

}  // namespace drama
