#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "drama/bitmask.hpp"
#include "drama/dram_state.hpp"

namespace drama {

/// How many low physical-address bits the unprivileged side can see.
enum class TranslationMode { Full, Pages1G, Pages2M, Pages4K };

std::string_view to_string(TranslationMode mode);
/// Accepts full|1g|2m|4k; throws Parse.
TranslationMode parse_translation_mode(std::string_view text);
/// Bits an address view exposes under `mode`.
BitMask visible_bits(TranslationMode mode);

struct AddressRegion {
  PhysAddr base = 0;
  std::uint64_t size = 0;

  PhysAddr end() const { return base + size; }
  bool contains(PhysAddr a) const { return a >= base && a < end(); }
};

/// "start:end" with hex or decimal bounds, end exclusive. Throws Parse.
AddressRegion parse_region(std::string_view text);

/// Black-box latency source. A hardware backend would implement the same
/// interface with clflush + rdtsc.
class TimingOracle {
 public:
  virtual ~TimingOracle() = default;

  /// Mean latency of `reps` alternating (a, b) access pairs. One warm-up pair
  /// is issued first and discarded.
  virtual double measure(PhysAddr a, PhysAddr b, unsigned reps) = 0;
  virtual TranslationMode translation() const = 0;

  /// The address as the measuring side sees it.
  PhysAddr visible(PhysAddr addr) const { return addr & visible_bits(translation()).raw(); }
};

class SimulatedOracle final : public TimingOracle {
 public:
  SimulatedOracle(DramConfig config, TimingModel timing, std::uint64_t seed,
                  TranslationMode mode = TranslationMode::Full);

  double measure(PhysAddr a, PhysAddr b, unsigned reps) override;
  TranslationMode translation() const override { return mode_; }

  DramState &state() { return state_; }

 private:
  DramState state_;
  TranslationMode mode_;
};

inline constexpr unsigned kDefaultReps = 16;
inline constexpr std::size_t kDefaultPoolSize = 4096;
inline constexpr std::size_t kDefaultProbeCount = 128;
inline constexpr unsigned kDefaultMaxWeight = 7;

/// Distinct, uniformly drawn, 64-byte aligned addresses. Throws RegionTooSmall.
std::vector<PhysAddr> build_pool(AddressRegion region, std::size_t pool_size, std::uint64_t seed);

/// Threshold inside the widest separating gap of the measurements; values
/// above it are conflicts. Throws NoGapFound.
double find_conflict_threshold(std::span<const double> pair_means, double granularity = 1.0);

struct SameBankSets {
  std::vector<std::vector<PhysAddr>> sets;
  double threshold = 0;
  /// Every measurement that fed the threshold, probe-major order.
  std::vector<double> pair_means;
};

/// Tests the first `probe_count` pool entries against every other entry, plus
/// one self-pair per probe as a same-row baseline, and groups conflicting
/// partners. Overlapping groups are merged. Throws NoGapFound.
SameBankSets build_sets(TimingOracle &oracle, std::span<const PhysAddr> pool, std::size_t probe_count,
                        unsigned reps = kDefaultReps);

struct RecoveredFunctions {
  std::vector<BitMask> masks;
  BitMask bit_universe;
  /// Candidates that passed both constancy tests before basis reduction.
  std::size_t candidates = 0;
};

/// Brute-force search of XOR functions with 1..max_weight coefficients over
/// bits 6..29 (further capped by `mode`), keeping those constant within every
/// set and non-constant across one representative per set, then reducing to a
/// low-weight basis. Throws NoFunctionsFound.
RecoveredFunctions reconstruct_functions(const SameBankSets &sets, TranslationMode mode,
                                         unsigned max_weight = kDefaultMaxWeight);

BitMask search_universe(TranslationMode mode);

struct VerificationReport {
  double agreement_rate = 0;
  std::size_t trials = 0;
  std::size_t predicted_same = 0;
  std::size_t measured_conflict = 0;
};

/// Compares same-bank predictions of `masks` with measured conflicts on fresh
/// random pairs from `region`.
VerificationReport verify_functions(std::span<const BitMask> masks, TimingOracle &oracle, double threshold,
                                    std::size_t trials, AddressRegion region, std::uint64_t seed,
                                    unsigned reps = kDefaultReps);

}  // namespace drama
