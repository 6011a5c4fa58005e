#include <bit>
#include <cmath>

#include "drama/dram_state.hpp"
#include "drama/error.hpp"

namespace drama {

void TimingModel::validate() const {
  if (!(cache_hit_cycles < row_hit_cycles && row_hit_cycles < row_conflict_cycles)) {
    throw Error(ErrorKind::InvalidConfig, "timing model requires cache_hit < row_hit < row_conflict");
  }
  if (!(noise_stddev >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise_stddev must be >= 0");
  if (refresh_interval_cycles && *refresh_interval_cycles == 0) {
    throw Error(ErrorKind::InvalidConfig, "refresh interval must be positive");
  }
}

DramState::DramState(DramConfig config, TimingModel timing, std::uint64_t seed)
    : config_(std::move(config)), timing_(timing), rng_(seed) {
  config_.validate();
  timing_.validate();
  open_rows_.assign(config_.bank_count(), -1);
  for (const auto &f : config_.functions) fn_masks_.push_back(f.mask.raw());
  const auto &rb = config_.row_bits;
  for (std::size_t i = 0; i < rb.size();) {
    std::size_t j = i + 1;
    while (j < rb.size() && rb[j] == rb[j - 1] + 1) ++j;
    const auto len = static_cast<unsigned>(j - i);
    row_runs_.push_back({rb[i], (std::uint64_t{1} << len) - 1, static_cast<unsigned>(i)});
    i = j;
  }
  if (timing_.refresh_interval_cycles) next_refresh_ = *timing_.refresh_interval_cycles;
}

std::uint64_t DramState::bank_index(PhysAddr addr) const {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < fn_masks_.size(); ++i) {
    idx |= static_cast<std::uint64_t>(std::popcount(fn_masks_[i] & addr) & 1) << i;
  }
  return idx;
}

std::uint64_t DramState::row_index(PhysAddr addr) const {
  std::uint64_t row = 0;
  for (const auto &run : row_runs_) row |= ((addr >> run.shift) & run.mask) << run.dest;
  return row;
}

void DramState::advance_to(Cycles t) {
  if (t > now_) now_ = t;
  if (timing_.refresh_interval_cycles && now_ >= next_refresh_) {
    refresh();
    const Cycles interval = *timing_.refresh_interval_cycles;
    next_refresh_ = (now_ / interval + 1) * interval;
  }
}

void DramState::refresh() { std::fill(open_rows_.begin(), open_rows_.end(), -1); }

std::optional<std::uint64_t> DramState::open_row(BankCoordinate bank) const {
  const std::int64_t r = open_rows_.at(bank.bits);
  if (r < 0) return std::nullopt;
  return static_cast<std::uint64_t>(r);
}

Cycles DramState::draw(double mean) {
  if (timing_.noise_stddev == 0.0) return static_cast<Cycles>(std::llround(mean));
  double z;
  do {
    z = normal_(rng_);
  } while (std::abs(z) > 4.0);
  const double v = mean + timing_.noise_stddev * z;
  return v < 1.0 ? 1 : static_cast<Cycles>(std::llround(v));
}

AccessResult DramState::access_detailed(PhysAddr addr, bool cached) {
  advance_to(now_);
  AccessResult result;
  if (cached) {
    result.kind = AccessClass::CacheHit;
    result.latency = draw(timing_.cache_hit_cycles);
  } else {
    const std::uint64_t bank = bank_index(addr);
    const auto row = static_cast<std::int64_t>(row_index(addr));
    std::int64_t &open = open_rows_[bank];
    if (open < 0 || open == row) {
      result.kind = AccessClass::RowHit;
      result.latency = draw(timing_.row_hit_cycles);
    } else {
      result.kind = AccessClass::RowConflict;
      result.latency = draw(timing_.row_conflict_cycles);
    }
    open = row;
  }
  now_ += result.latency;
  return result;
}

AccessResult DramState::access_at(Cycles t, PhysAddr addr, bool cached) {
  advance_to(t);
  return access_detailed(addr, cached);
}

}  // namespace drama
