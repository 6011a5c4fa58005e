#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "drama/dram_config.hpp"
#include "drama/rng.hpp"

namespace drama {

using Cycles = std::uint64_t;

struct TimingModel {
  double cache_hit_cycles = 70.0;
  double row_hit_cycles = 200.0;
  double row_conflict_cycles = 330.0;
  /// Gaussian jitter; draws are truncated at +-4 sigma.
  double noise_stddev = 8.0;
  std::optional<Cycles> refresh_interval_cycles;

  /// Throws InvalidConfig unless cache < hit < conflict and noise >= 0.
  void validate() const;
};

enum class AccessClass { CacheHit, RowHit, RowConflict };

struct AccessResult {
  Cycles latency = 0;
  AccessClass kind = AccessClass::CacheHit;
};

/// The simulated machine: one open-row register per bank, a seeded latency
/// model and a cycle clock. Single owner; parallel experiments use separate
/// instances.
class DramState {
 public:
  DramState(DramConfig config, TimingModel timing, std::uint64_t seed);

  const DramConfig &config() const { return config_; }
  const TimingModel &timing() const { return timing_; }
  Cycles now() const { return now_; }

  /// Moves the clock forward (never backward), applying any refresh that
  /// falls due.
  void advance_to(Cycles t);

  /// Serves one access at the current time and advances the clock by its latency.
  Cycles access(PhysAddr addr, bool cached = false) { return access_detailed(addr, cached).latency; }
  AccessResult access_detailed(PhysAddr addr, bool cached = false);
  /// Same as access(), issued at time `t` (clock first moves to max(now, t)).
  AccessResult access_at(Cycles t, PhysAddr addr, bool cached = false);

  /// Closes every row.
  void refresh();

  std::optional<std::uint64_t> open_row(BankCoordinate bank) const;
  std::uint64_t bank_index(PhysAddr addr) const;
  std::uint64_t row_index(PhysAddr addr) const;

 private:
  Cycles draw(double mean);

  DramConfig config_;
  TimingModel timing_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Cycles now_ = 0;
  Cycles next_refresh_ = 0;
  std::vector<std::int64_t> open_rows_;  // -1 = pre-charged
  std::vector<std::uint64_t> fn_masks_;
  struct RowRun {
    unsigned shift;
    std::uint64_t mask;
    unsigned dest;
  };
  std::vector<RowRun> row_runs_;
};

}  // namespace drama
