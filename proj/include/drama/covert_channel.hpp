#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drama/dram_state.hpp"
#include "drama/timing_reveng.hpp"

namespace drama {

/// One parallel sub-channel: a bank both sides can reach through different rows.
struct Tuple {
  BankCoordinate bank;
  PhysAddr sender = 0;
  PhysAddr receiver = 0;
};

struct TupleSet {
  std::vector<Tuple> tuples;
};

/// `count` tuples on distinct banks, addresses drawn from `region`.
/// Throws InvalidFraming when the config has fewer banks than `count`.
TupleSet select_tuples(const DramConfig &config, std::size_t count, std::uint64_t seed,
                       AddressRegion region = {0, std::uint64_t{1} << 30});

enum class SyncMode { WallClock, EmbeddedClock };

std::string_view to_string(SyncMode mode);
/// Accepts wall|clock; throws Parse.
SyncMode parse_sync_mode(std::string_view text);

inline constexpr unsigned kDefaultTuples = 8;
inline constexpr unsigned kDefaultProbesPerBlock = 32;
/// Blocks of toggling clock with zero data that precede the start-of-frame block.
inline constexpr unsigned kPreambleBlocks = 4;

struct FramingConfig {
  Cycles block_period_cycles = 1 << 16;
  SyncMode sync = SyncMode::WallClock;
  unsigned receiver_probes_per_block = kDefaultProbesPerBlock;
  /// Conflict threshold; calibrated by the receiver when absent.
  std::optional<double> threshold;
  double clock_hz = 3e9;
  /// Fixed per-access cost of each side (timer reads, flushes) plus uniform jitter.
  Cycles access_overhead_cycles = 40;
  Cycles overhead_jitter_cycles = 40;
  /// Embedded clock only: when the receiver starts listening, relative to the
  /// sender's first block.
  Cycles receiver_offset_cycles = 0;
  /// Uniformly random uncached accesses by other processes, per cycle.
  double background_noise_rate = 0;
  /// Fault injection: the sender stops driving the clock tuple from this block on.
  std::optional<std::uint64_t> clock_halt_block;

  /// |tuples| in wall-clock mode, |tuples| - 1 with an embedded clock.
  unsigned bits_per_block(std::size_t tuple_count) const;
};

struct TransmissionReport {
  Cycles block_period_cycles = 0;
  unsigned bits_per_block = 0;
  std::size_t payload_bits = 0;
  std::size_t bit_errors = 0;
  /// Bits per simulated second at `clock_hz`.
  double raw_bitrate = 0;
  double error_probability = 0;
  double capacity = 0;
};

struct Transmission {
  std::vector<std::uint8_t> received;
  TransmissionReport report;
};

/// Binary entropy in bits, H(0) = H(1) = 0.
double binary_entropy(double e);
/// raw x (1 - H(e)).
double capacity(double raw_bitrate, double e);

/// Sends `payload` (one byte per bit, 0/1) from sender to receiver over the
/// shared `sim`. Payload length must be a multiple of bits_per_block.
/// Throws InvalidFraming; ClockLost with an embedded clock.
Transmission transmit(DramState &sim, const TupleSet &tuples, const FramingConfig &framing,
                      std::span<const std::uint8_t> payload, std::uint64_t seed);

/// `count` random bits.
std::vector<std::uint8_t> random_payload(std::size_t count, std::uint64_t seed);
/// Hex string to bits, most significant bit of each nibble first. Throws Parse.
std::vector<std::uint8_t> bits_from_hex(std::string_view hex);

/// One transmission of `payload_len` random bits per period, each on a fresh
/// copy of `sim`. Payload length is rounded up to whole blocks.
std::vector<TransmissionReport> run_sweep(const DramState &sim, const TupleSet &tuples, FramingConfig framing,
                                          std::span<const Cycles> periods, std::size_t payload_len,
                                          std::uint64_t seed);

}  // namespace drama
