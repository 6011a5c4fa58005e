#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "drama/dram_state.hpp"

namespace drama {

struct RowGeometry {
  std::uint64_t pages_per_row = 0;
  std::uint64_t bytes_per_page_per_row = 0;
};

/// How a row is spread over 4 KB pages. Bits a0..a11 are the page offset, so
/// the independent functions they feed split every page across 2^rank banks.
RowGeometry row_geometry(const DramConfig &config);

/// Scripted victim sharing the attacker's machine.
struct VictimModel {
  /// Touched once per burst access whenever an event fires.
  std::vector<PhysAddr> targets;
  /// Event firing times in simulated cycles.
  std::vector<Cycles> schedule;
  /// Uniformly random uncached accesses over [0, 2^30) per cycle.
  double noise_rate = 0;
  /// Activity independent of the event (e.g. a busy loop), accessed every steady_period cycles.
  std::vector<PhysAddr> steady_targets;
  Cycles steady_period = 0;
  /// An event re-touches its targets burst_count times, burst_spacing cycles apart.
  unsigned burst_count = 1;
  Cycles burst_spacing = 0;
};

/// {"targets":[hex...], "schedule":[cycles...], "noise_rate": float} plus the
/// optional steady_targets / steady_period / burst_count / burst_spacing.
VictimModel victim_from_json(const nlohmann::json &doc);
nlohmann::json to_json(const VictimModel &victim);

/// Replays a victim's accesses into a shared DramState in time order.
class VictimRunner {
 public:
  VictimRunner(VictimModel victim, std::uint64_t seed, Cycles start = 0);

  /// Issues every victim access scheduled before `t`.
  void run_until(DramState &state, Cycles t);
  /// Fires one extra event at `t` (profiling).
  void inject_event(Cycles t);

 private:
  Cycles next_time() const;

  VictimModel victim_;
  Rng rng_;
  std::vector<Cycles> events_;  // pending burst-access times, sorted descending
  Cycles next_steady_;
  double next_noise_;
};

struct ProbePair {
  PhysAddr p = 0;
  PhysAddr p_bar = 0;
};

/// Checks same bank, different rows.
bool valid_probe_pair(const DramConfig &config, const ProbePair &pair);

/// Conflict partner for `p`: random address in [0, 2^30) in the same bank
/// and another row, avoiding `exclude`.
PhysAddr find_conflict_address(const DramConfig &config, PhysAddr p, std::uint64_t seed,
                               std::span<const PhysAddr> exclude = {});

/// Addresses sharing bank and row with `addr` but on other 4 KB pages, ascending.
std::vector<PhysAddr> same_row_addresses(const DramConfig &config, PhysAddr addr, std::size_t limit = 64);

/// Access p_bar, let `wait` cycles pass (victim activity happens), access p.
/// RowHit when p's latency is at most `row_hit_max`.
AccessClass probe(DramState &state, const ProbePair &pair, Cycles wait, double row_hit_max,
                  VictimRunner *victim = nullptr);

struct CandidateProfile {
  PhysAddr addr = 0;
  PhysAddr p_bar = 0;
  std::uint64_t hits_with_event = 0;
  std::uint64_t hits_without_event = 0;
  std::uint64_t trials = 0;
};

struct TemplateProfile {
  std::vector<CandidateProfile> candidates;
};

/// For each candidate: `trials` probes with one victim event fired mid-wait
/// and `trials` without. The victim's own schedule is ignored; its steady
/// activity and noise keep running.
TemplateProfile profile(DramState &state, std::span<const PhysAddr> candidates, const VictimModel &victim,
                        std::uint64_t trials, Cycles wait, double row_hit_max, std::uint64_t seed);

/// Candidates never hit without the event and hit at least `min_hits` times
/// with it, by hit count descending. Throws NoTemplateFound.
std::vector<CandidateProfile> select_template(const TemplateProfile &profile, std::uint64_t min_hits);

struct MonitorSample {
  Cycles cycle = 0;
  bool row_hit = false;
};

struct MonitorResult {
  /// First probe of each run of consecutive row hits.
  std::vector<Cycles> detections;
  std::vector<MonitorSample> trace;
};

/// Probes back to back for `duration` cycles, one probe every `probe_interval`
/// cycles starting at the state's current time.
MonitorResult monitor(DramState &state, const ProbePair &pair, const VictimModel &victim, Cycles duration,
                      Cycles probe_interval, double row_hit_max, std::uint64_t seed);

}  // namespace drama
