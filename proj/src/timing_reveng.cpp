#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_set>

#include "drama/error.hpp"
#include "drama/gap.hpp"
#include "drama/timing_reveng.hpp"

namespace drama {

namespace {

constexpr unsigned kLowestSearchBit = 6;   // a0..a5 address bytes within a cache line
constexpr unsigned kHighestSearchBit = 29;  // a30+ only feed row addressing

}  // namespace

std::string_view to_string(TranslationMode mode) {
  switch (mode) {
    case TranslationMode::Full: return "full";
    case TranslationMode::Pages1G: return "1g";
    case TranslationMode::Pages2M: return "2m";
    case TranslationMode::Pages4K: return "4k";
  }
  return "?";
}

TranslationMode parse_translation_mode(std::string_view text) {
  for (auto m : {TranslationMode::Full, TranslationMode::Pages1G, TranslationMode::Pages2M, TranslationMode::Pages4K}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorKind::Parse, "unknown translation mode '" + std::string(text) + "' (full|1g|2m|4k)");
}

BitMask visible_bits(TranslationMode mode) {
  switch (mode) {
    case TranslationMode::Full: return BitMask::range(0, kAddressBits - 1);
    case TranslationMode::Pages1G: return BitMask::range(0, 29);
    case TranslationMode::Pages2M: return BitMask::range(0, 20);
    case TranslationMode::Pages4K: return BitMask::range(0, 11);
  }
  return BitMask();
}

BitMask search_universe(TranslationMode mode) {
  return BitMask::range(kLowestSearchBit, kHighestSearchBit) & visible_bits(mode);
}

AddressRegion parse_region(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorKind::Parse, "region must be start:end");
  const PhysAddr lo = parse_address(text.substr(0, colon));
  const PhysAddr hi = parse_address(text.substr(colon + 1));
  if (hi <= lo) throw Error(ErrorKind::Parse, "region end must exceed start");
  return AddressRegion{lo, hi - lo};
}

SimulatedOracle::SimulatedOracle(DramConfig config, TimingModel timing, std::uint64_t seed, TranslationMode mode)
    : state_(std::move(config), timing, seed), mode_(mode) {}

double SimulatedOracle::measure(PhysAddr a, PhysAddr b, unsigned reps) {
  state_.access(a);
  state_.access(b);
  Cycles total = 0;
  for (unsigned i = 0; i < reps; ++i) {
    total += state_.access(a);
    total += state_.access(b);
  }
  return reps == 0 ? 0.0 : static_cast<double>(total) / (2.0 * reps);
}

std::vector<PhysAddr> build_pool(AddressRegion region, std::size_t pool_size, std::uint64_t seed) {
  if (pool_size < 2) throw Error(ErrorKind::InvalidConfig, "pool_size must be at least 2");
  const PhysAddr first_line = (region.base + 63) & ~PhysAddr{63};
  const std::uint64_t lines = region.end() > first_line ? (region.end() - first_line) / 64 : 0;
  if (lines < pool_size) {
    throw Error(ErrorKind::RegionTooSmall, "region holds " + std::to_string(lines) + " cache lines, pool needs " +
                                               std::to_string(pool_size));
  }
  Rng rng(seed);
  std::vector<PhysAddr> pool;
  pool.reserve(pool_size);
  if (pool_size * 2 > lines) {
    std::vector<std::uint64_t> all(lines);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < pool_size; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, lines - 1);
      std::swap(all[i], all[pick(rng)]);
      pool.push_back(first_line + all[i] * 64);
    }
    return pool;
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, lines - 1);
  std::unordered_set<std::uint64_t> seen;
  while (pool.size() < pool_size) {
    const std::uint64_t line = pick(rng);
    if (seen.insert(line).second) pool.push_back(first_line + line * 64);
  }
  return pool;
}

double find_conflict_threshold(std::span<const double> pair_means, double granularity) {
  std::vector<double> sorted(pair_means.begin(), pair_means.end());
  std::sort(sorted.begin(), sorted.end());
  const auto gap = widest_separating_gap(sorted, granularity);
  if (!gap) {
    throw Error(ErrorKind::NoGapFound, "no gap separates the measurements into two classes (" +
                                           std::to_string(sorted.size()) + " samples)");
  }
  return gap->midpoint();
}

SameBankSets build_sets(TimingOracle &oracle, std::span<const PhysAddr> pool, std::size_t probe_count, unsigned reps) {
  if (probe_count > pool.size()) throw Error(ErrorKind::InvalidConfig, "probe_count exceeds pool size");
  SameBankSets out;
  out.pair_means.reserve(probe_count * pool.size());
  // Row-major: probe p's measurements live at [p * |pool|, (p+1) * |pool|),
  // with the self-pair baseline stored at index p.
  for (std::size_t p = 0; p < probe_count; ++p) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      out.pair_means.push_back(oracle.measure(pool[p], pool[j], reps));
    }
  }
  out.threshold = find_conflict_threshold(out.pair_means);

  std::vector<std::set<PhysAddr>> groups;
  for (std::size_t p = 0; p < probe_count; ++p) {
    std::set<PhysAddr> partners;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (j != p && out.pair_means[p * pool.size() + j] > out.threshold) partners.insert(pool[j]);
    }
    if (partners.empty()) continue;
    partners.insert(pool[p]);

    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (std::any_of(partners.begin(), partners.end(), [&](PhysAddr a) { return groups[i].count(a) != 0; })) {
        hits.push_back(i);
      }
    }
    if (hits.empty()) {
      groups.push_back(std::move(partners));
      continue;
    }
    // Merge into the earliest overlapping group so discovery order is kept.
    auto &target = groups[hits.front()];
    target.insert(partners.begin(), partners.end());
    for (auto it = hits.rbegin(); it != hits.rend() - 1; ++it) {
      target.insert(groups[*it].begin(), groups[*it].end());
      groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(*it));
    }
  }
  for (auto &g : groups) out.sets.emplace_back(g.begin(), g.end());
  return out;
}

RecoveredFunctions reconstruct_functions(const SameBankSets &sets, TranslationMode mode, unsigned max_weight) {
  const BitMask view = visible_bits(mode);
  std::vector<std::vector<PhysAddr>> usable;
  for (const auto &s : sets.sets) {
    if (s.size() < 2) continue;
    std::vector<PhysAddr> v;
    v.reserve(s.size());
    for (PhysAddr a : s) v.push_back(a & view.raw());
    usable.push_back(std::move(v));
  }
  if (usable.size() < 2) {
    throw Error(ErrorKind::NoFunctionsFound, "need at least two same-bank sets with two or more addresses");
  }

  // Constancy within a set is parity-zero on every difference to its first member.
  std::vector<std::vector<std::uint64_t>> diffs;
  for (const auto &s : usable) {
    std::vector<std::uint64_t> d;
    for (std::size_t i = 1; i < s.size(); ++i) d.push_back(s[i] ^ s[0]);
    diffs.push_back(std::move(d));
  }
  std::vector<std::uint64_t> reps;
  for (const auto &s : usable) reps.push_back(s[0]);
  // Screen against the largest set first; it rejects the most candidates.
  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return diffs[a].size() > diffs[b].size(); });

  auto constant_within = [](std::uint64_t m, const std::vector<std::uint64_t> &d) {
    for (std::uint64_t x : d) {
      if (std::popcount(m & x) & 1) return false;
    }
    return true;
  };

  RecoveredFunctions out;
  out.bit_universe = search_universe(mode);
  std::vector<BitMask> accepted;
  for (unsigned n = 1; n <= max_weight; ++n) {
    MaskCombinations gen(out.bit_universe, n);
    for (BitMask m; gen.next(m);) {
      const std::uint64_t raw = m.raw();
      bool ok = true;
      for (std::size_t idx : order) {
        if (!constant_within(raw, diffs[idx])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const int first = std::popcount(raw & reps[0]) & 1;
      const bool varies = std::any_of(reps.begin() + 1, reps.end(),
                                      [&](std::uint64_t r) { return (std::popcount(raw & r) & 1) != first; });
      if (varies) accepted.push_back(m);
    }
  }
  out.candidates = accepted.size();
  out.masks = reduce_to_independent(std::move(accepted));
  if (out.masks.empty()) {
    throw Error(ErrorKind::NoFunctionsFound, "no XOR function is constant within every set and varies across sets");
  }
  return out;
}

VerificationReport verify_functions(std::span<const BitMask> masks, TimingOracle &oracle, double threshold,
                                    std::size_t trials, AddressRegion region, std::uint64_t seed, unsigned reps) {
  if (trials == 0) throw Error(ErrorKind::InvalidConfig, "verification needs at least one trial");
  if (region.size < 128) throw Error(ErrorKind::RegionTooSmall, "verification region is too small");
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, region.size / 64 - 1);
  VerificationReport report;
  report.trials = trials;
  std::size_t agree = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const PhysAddr a = region.base + line(rng) * 64;
    PhysAddr b = region.base + line(rng) * 64;
    while (b == a) b = region.base + line(rng) * 64;
    const PhysAddr va = oracle.visible(a);
    const PhysAddr vb = oracle.visible(b);
    const bool predicted = std::all_of(masks.begin(), masks.end(),
                                       [&](BitMask m) { return eval_mask(m, va) == eval_mask(m, vb); });
    const bool measured = oracle.measure(a, b, reps) > threshold;
    report.predicted_same += predicted ? 1 : 0;
    report.measured_conflict += measured ? 1 : 0;
    agree += (predicted == measured) ? 1 : 0;
  }
  report.agreement_rate = static_cast<double>(agree) / static_cast<double>(trials);
  return report;
}

}  // namespace drama
