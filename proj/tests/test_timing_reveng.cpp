#include <doctest.h>

#include <map>
#include <set>

#include "drama/error.hpp"
#include "drama/gap.hpp"
#include "drama/timing_reveng.hpp"

using namespace drama;

namespace {

// Same-bank sets built straight from the ground-truth decoder.
SameBankSets oracle_sets(const DramConfig &c, std::span<const PhysAddr> pool) {
  std::map<std::uint32_t, std::vector<PhysAddr>> by_bank;
  for (PhysAddr a : pool) by_bank[c.bank_of(a).bits].push_back(a);
  SameBankSets out;
  for (auto &[bank, v] : by_bank) out.sets.push_back(v);
  return out;
}

}  // namespace

TEST_CASE("conflict threshold sits in the gap") {
  const double two[] = {200, 330};
  CHECK(find_conflict_threshold(two) == doctest::Approx(265));
  std::vector<double> mixed;
  for (int i = 0; i < 100; ++i) mixed.push_back(195 + i % 10);
  for (int i = 0; i < 5; ++i) mixed.push_back(325 + i);
  CHECK(find_conflict_threshold(mixed) == doctest::Approx((204 + 325) / 2.0));
  std::vector<double> flat;
  for (int i = 0; i < 200; ++i) flat.push_back(190 + (i * 4) % 21);
  CHECK_THROWS_AS(find_conflict_threshold(flat), Error);
  const double one[] = {200};
  CHECK_THROWS_AS(find_conflict_threshold(one), Error);
}

TEST_CASE("widest_separating_gap splits two clusters at their boundary") {
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(200 + i % 5);
  for (int i = 0; i < 30; ++i) v.push_back(320 + i % 7);
  std::sort(v.begin(), v.end());
  const auto g = widest_separating_gap(v, 1.0);
  REQUIRE(g);
  CHECK(g->split == 50);
  CHECK(g->low == 204);
  CHECK(g->high == 320);
  CHECK_FALSE(widest_separating_gap(v, 60.0));  // gap narrower than two bins
}

TEST_CASE("pool addresses are distinct, aligned and inside the region") {
  const AddressRegion r{0x100000, 0x100000};
  for (std::size_t n : {16u, 8000u, 16384u}) {
    const auto pool = build_pool(r, n, 9);
    CHECK(pool.size() == n);
    CHECK(std::set<PhysAddr>(pool.begin(), pool.end()).size() == n);
    for (PhysAddr a : pool) {
      CHECK(a % 64 == 0);
      CHECK(r.contains(a));
    }
  }
  CHECK_THROWS_AS(build_pool(r, 16385, 9), Error);
  CHECK(build_pool(r, 100, 1) == build_pool(r, 100, 1));
}

TEST_CASE("translation modes and regions parse") {
  CHECK(parse_translation_mode("2m") == TranslationMode::Pages2M);
  CHECK_THROWS_AS(parse_translation_mode("3m"), Error);
  CHECK(visible_bits(TranslationMode::Pages2M) == BitMask::range(0, 20));
  CHECK(search_universe(TranslationMode::Full) == BitMask::range(6, 29));
  CHECK(search_universe(TranslationMode::Pages4K) == BitMask::range(6, 11));
  const auto r = parse_region("0x1000:0x3000");
  CHECK(r.base == 0x1000);
  CHECK(r.size == 0x2000);
  CHECK_THROWS_AS(parse_region("0x3000:0x1000"), Error);
}

TEST_CASE("measured sets are ground-truth same-bank sets") {
  const auto c = load_preset("ivyhaswell_ddr3_1ch");
  SimulatedOracle oracle(c, TimingModel{}, 4);
  const auto pool = build_pool({0, std::uint64_t{1} << 30}, 1024, 5);
  const auto sets = build_sets(oracle, pool, 64);
  CHECK(sets.pair_means.size() == 64 * pool.size());
  CHECK(sets.threshold > 200);
  CHECK(sets.threshold < 330);
  CHECK(sets.sets.size() <= c.bank_count());
  std::set<std::uint32_t> banks;
  for (const auto &s : sets.sets) {
    for (PhysAddr a : s) CHECK(same_bank(c, a, s.front()));
    banks.insert(c.bank_of(s.front()).bits);
  }
  CHECK(banks.size() == sets.sets.size());  // merged: one set per bank
}

TEST_CASE("reconstruction from ground-truth sets recovers the mapping span") {
  for (const char *name : {"sandybridge_ddr3_2ch", "skylake_ddr4_2ch", "exynos7420"}) {
    CAPTURE(name);
    const auto c = load_preset(name);
    const auto pool = build_pool({0, std::uint64_t{1} << 30}, 4096, 1);
    const auto rec = reconstruct_functions(oracle_sets(c, pool), TranslationMode::Full);
    CHECK(spans_equal(rec.masks, c.masks()));
    for (auto m : rec.masks) CHECK(m.weight() <= kDefaultMaxWeight);
  }
}

TEST_CASE("end-to-end timing pipeline") {
  const auto c = load_preset("sandybridge_ddr3_2ch");
  SimulatedOracle oracle(c, TimingModel{}, 2);
  const AddressRegion region{0, std::uint64_t{1} << 30};
  const auto pool = build_pool(region, kDefaultPoolSize, 3);
  const auto sets = build_sets(oracle, pool, kDefaultProbeCount);
  const auto rec = reconstruct_functions(sets, TranslationMode::Full);
  CHECK(spans_equal(rec.masks, c.masks()));
  const auto rep = verify_functions(rec.masks, oracle, sets.threshold, 200, region, 8);
  CHECK(rep.agreement_rate >= 0.99);
}

TEST_CASE("2 MB pages restrict the recoverable span") {
  const auto c = load_preset("haswell_ep_noninterleaved_1ch");
  const auto pool = build_pool({0, std::uint64_t{1} << 30}, 4096, 1);
  const auto rec = reconstruct_functions(oracle_sets(c, pool), TranslationMode::Pages2M);
  for (auto m : rec.masks) CHECK(m.subset_of(BitMask::range(6, 20)));
  CHECK(spans_equal(rec.masks, restrict_span(c.masks(), search_universe(TranslationMode::Pages2M))));
  CHECK(rec.masks.size() < c.masks().size());
}

TEST_CASE("a single-bank pool yields no functions") {
  const auto c = load_preset("sandybridge_ddr3_1ch");
  std::vector<PhysAddr> pool;
  for (PhysAddr a = 0; pool.size() < 32; a += PhysAddr{1} << 20) {
    if (same_bank(c, a, 0)) pool.push_back(a);
  }
  SimulatedOracle oracle(c, TimingModel{}, 1);
  const auto sets = build_sets(oracle, pool, pool.size());
  CHECK(sets.sets.size() == 1);
  try {
    reconstruct_functions(sets, TranslationMode::Full);
    FAIL("expected NoFunctionsFound");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::NoFunctionsFound);
  }
}
