#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "drama/attack_utils.hpp"
#include "drama/error.hpp"

using namespace drama;

TEST_CASE("three-class thresholds recover the simulator's labels") {
  DramState s(load_preset("skylake_ddr4_2ch"), TimingModel{}, 1);
  const auto samples = sample_three_classes(s, 4000, 2);
  std::vector<double> raw;
  std::map<AccessClass, std::pair<double, double>> range;  // min, max per class
  for (const auto &x : samples) {
    raw.push_back(x.cycles);
    auto [it, fresh] = range.try_emplace(x.truth, x.cycles, x.cycles);
    it->second.first = std::min(it->second.first, x.cycles);
    it->second.second = std::max(it->second.second, x.cycles);
  }
  const auto th = fit_thresholds(raw);
  CHECK(th.cache_hit_max > range[AccessClass::CacheHit].second);
  CHECK(th.cache_hit_max < range[AccessClass::RowHit].first);
  CHECK(th.row_hit_max > range[AccessClass::RowHit].second);
  CHECK(th.row_hit_max < range[AccessClass::RowConflict].first);

  std::size_t wrong = 0;
  for (const auto &x : samples) wrong += classify_latency(x.cycles, th) != x.truth;
  CHECK(static_cast<double>(wrong) / samples.size() < 0.001);

  // Row hits measured on hardware fall in 180..216 cycles.
  for (double t = 180; t <= 216; t += 1) CHECK(classify_latency(t, th) == AccessClass::RowHit);

  const auto labeled = fit_thresholds(std::span<const LabeledLatency>(samples));
  CHECK(labeled.cache_hit_max < labeled.row_hit_max);
  for (const auto &x : samples) CHECK(classify_latency(x.cycles, labeled) == x.truth);
}

TEST_CASE("two modes leave a boundary missing") {
  std::vector<double> two;
  for (int i = 0; i < 500; ++i) {
    two.push_back(195 + i % 11);
    two.push_back(325 + i % 11);
  }
  CHECK_THROWS_AS(fit_thresholds(two), Error);
  std::vector<LabeledLatency> labeled{{70, AccessClass::CacheHit}, {200, AccessClass::RowHit}};
  CHECK_THROWS_AS(fit_thresholds(std::span<const LabeledLatency>(labeled)), Error);
}

TEST_CASE("classification boundaries are inclusive") {
  const LatencyThresholds th{130, 265};
  CHECK(classify_latency(0, th) == AccessClass::CacheHit);
  CHECK(classify_latency(130, th) == AccessClass::CacheHit);
  CHECK(classify_latency(265, th) == AccessClass::RowHit);
  CHECK(classify_latency(266, th) == AccessClass::RowConflict);
}

TEST_CASE("same-bank probability") {
  const auto sky = load_preset("skylake_ddr4_2ch");
  CHECK(same_bank_probability(sky, std::nullopt, 0).exact == 1.0 / 64);

  DramConfig one;
  one.functions = {{BitMask({13}), std::nullopt}};
  one.row_bits = {14, 15, 16};
  one.column_bits = {3, 4, 5};
  CHECK(same_bank_probability(one, std::nullopt, 0).exact == 0.5);

  const auto p = same_bank_probability(sky, 200000, 5);
  REQUIRE(p.estimate);
  CHECK(std::abs(*p.estimate - p.exact) <= 3 * p.sigma);

  // The collision rate of pool pairs matches 2^-B.
  const auto pool = build_pool({0, std::uint64_t{1} << 30}, 2000, 3);
  std::uint64_t same = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      same += same_bank(sky, pool[i], pool[j]);
      ++pairs;
    }
  }
  const double rate = static_cast<double>(same) / pairs;
  CHECK(rate == doctest::Approx(1.0 / 64).epsilon(0.1));
}

TEST_CASE("double-sided pairs match an exhaustive search") {
  const auto c = load_preset("ivyhaswell_ddr3_1ch");
  const AddressRegion region{0, std::uint64_t{1} << 20};
  const auto triples = find_double_sided_pairs(c, region);

  // Exhaustive: every (bank, n) with rows n-1 and n+1 present in the region.
  std::map<std::pair<std::uint32_t, std::uint64_t>, PhysAddr> lowest;
  for (PhysAddr a = 0; a < region.end(); a += 64) lowest.emplace(std::make_pair(c.bank_of(a).bits, c.row_of(a)), a);
  std::set<std::pair<std::uint32_t, std::uint64_t>> expected;
  for (const auto &[key, a] : lowest) {
    // The victim row itself may lie outside the region; only the aggressors must be inside.
    if (lowest.count({key.first, key.second + 2})) expected.insert({key.first, key.second + 1});
  }
  std::set<std::pair<std::uint32_t, std::uint64_t>> got;
  for (const auto &t : triples) {
    CHECK(same_bank(c, t.lower, t.upper));
    CHECK(c.row_of(t.lower) + 1 == t.victim_row);
    CHECK(c.row_of(t.upper) == t.victim_row + 1);
    CHECK(region.contains(t.lower));
    CHECK(region.contains(t.upper));
    got.insert({t.bank.bits, t.victim_row});
  }
  CHECK(got == expected);
  CHECK(std::is_sorted(triples.begin(), triples.end(), [](const HammerTriple &a, const HammerTriple &b) {
    return std::tie(a.bank.bits, a.victim_row) < std::tie(b.bank.bits, b.victim_row);
  }));

  const auto only = find_double_sided_pairs(c, region, triples.front().victim_row);
  for (const auto &t : only) CHECK(t.victim_row == triples.front().victim_row);

  // Rows start at a17: a 128 KB region holds a single row per bank.
  CHECK_THROWS_AS(find_double_sided_pairs(c, {0, std::uint64_t{1} << 17}), Error);
}
