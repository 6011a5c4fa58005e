#include <algorithm>

#include "drama/error.hpp"
#include "drama/side_channel.hpp"

namespace drama {

RowGeometry row_geometry(const DramConfig &config) {
  std::vector<BitMask> low;
  for (const auto &f : config.functions) low.push_back(f.mask & BitMask::range(0, 11));
  const auto r = static_cast<unsigned>(gf2_rank(low));
  RowGeometry g;
  g.bytes_per_page_per_row = std::uint64_t{4096} >> r;
  g.pages_per_row = config.row_size_bytes() / g.bytes_per_page_per_row;
  return g;
}

namespace {

PhysAddr address_from_json(const nlohmann::json &j) {
  if (j.is_string()) return parse_address(j.get<std::string>());
  if (j.is_number_unsigned()) return j.get<PhysAddr>();
  throw Error(ErrorKind::Parse, "address must be a hex string or unsigned integer");
}

}  // namespace

VictimModel victim_from_json(const nlohmann::json &doc) {
  VictimModel v;
  try {
    for (const auto &a : doc.at("targets")) v.targets.push_back(address_from_json(a));
    if (doc.contains("schedule")) {
      for (const auto &t : doc.at("schedule")) v.schedule.push_back(t.get<Cycles>());
    }
    v.noise_rate = doc.value("noise_rate", 0.0);
    if (doc.contains("steady_targets")) {
      for (const auto &a : doc.at("steady_targets")) v.steady_targets.push_back(address_from_json(a));
    }
    v.steady_period = doc.value("steady_period", Cycles{0});
    v.burst_count = doc.value("burst_count", 1u);
    v.burst_spacing = doc.value("burst_spacing", Cycles{0});
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Parse, std::string("victim: ") + e.what());
  }
  if (v.targets.empty()) throw Error(ErrorKind::Parse, "victim: targets must not be empty");
  if (v.noise_rate < 0) throw Error(ErrorKind::Parse, "victim: noise_rate must be >= 0");
  if (v.burst_count == 0) throw Error(ErrorKind::Parse, "victim: burst_count must be >= 1");
  if (!v.steady_targets.empty() && v.steady_period == 0) {
    throw Error(ErrorKind::Parse, "victim: steady_targets need a positive steady_period");
  }
  return v;
}

nlohmann::json to_json(const VictimModel &v) {
  nlohmann::json j;
  j["targets"] = nlohmann::json::array();
  for (PhysAddr a : v.targets) j["targets"].push_back(format_address(a));
  j["schedule"] = v.schedule;
  j["noise_rate"] = v.noise_rate;
  if (!v.steady_targets.empty()) {
    j["steady_targets"] = nlohmann::json::array();
    for (PhysAddr a : v.steady_targets) j["steady_targets"].push_back(format_address(a));
    j["steady_period"] = v.steady_period;
  }
  j["burst_count"] = v.burst_count;
  j["burst_spacing"] = v.burst_spacing;
  return j;
}

namespace {

constexpr Cycles kNever = ~Cycles{0};

}  // namespace

VictimRunner::VictimRunner(VictimModel victim, std::uint64_t seed, Cycles start)
    : victim_(std::move(victim)), rng_(seed) {
  for (Cycles t : victim_.schedule) inject_event(t);
  next_steady_ = victim_.steady_targets.empty() ? kNever : start;
  next_noise_ = static_cast<double>(start);
  if (victim_.noise_rate > 0) {
    next_noise_ += std::exponential_distribution<double>(victim_.noise_rate)(rng_);
  }
}

void VictimRunner::inject_event(Cycles t) {
  for (unsigned b = 0; b < victim_.burst_count; ++b) events_.push_back(t + b * victim_.burst_spacing);
  std::sort(events_.begin(), events_.end(), std::greater<>());
}

Cycles VictimRunner::next_time() const {
  Cycles t = events_.empty() ? kNever : events_.back();
  t = std::min(t, next_steady_);
  if (victim_.noise_rate > 0) t = std::min(t, static_cast<Cycles>(next_noise_));
  return t;
}

void VictimRunner::run_until(DramState &state, Cycles t) {
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  for (Cycles nt = next_time(); nt < t; nt = next_time()) {
    if (!events_.empty() && events_.back() == nt) {
      events_.pop_back();
      for (PhysAddr a : victim_.targets) state.access_at(nt, a);
    } else if (next_steady_ == nt) {
      for (PhysAddr a : victim_.steady_targets) state.access_at(nt, a);
      next_steady_ += victim_.steady_period;
    } else {
      state.access_at(nt, line(rng_) << 6);
      next_noise_ += std::exponential_distribution<double>(victim_.noise_rate)(rng_);
    }
  }
}

bool valid_probe_pair(const DramConfig &config, const ProbePair &pair) {
  return same_bank(config, pair.p, pair.p_bar) && config.row_of(pair.p) != config.row_of(pair.p_bar);
}

PhysAddr find_conflict_address(const DramConfig &config, PhysAddr p, std::uint64_t seed,
                               std::span<const PhysAddr> exclude) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  const auto bank = config.bank_of(p);
  const auto row = config.row_of(p);
  for (std::uint64_t tries = 0; tries < 1024 * config.bank_count(); ++tries) {
    const PhysAddr c = line(rng) << 6;
    if (config.bank_of(c) != bank || config.row_of(c) == row) continue;
    if (std::find(exclude.begin(), exclude.end(), c) != exclude.end()) continue;
    return c;
  }
  throw Error(ErrorKind::InvalidConfig, "no conflict address found for " + format_address(p));
}

std::vector<PhysAddr> same_row_addresses(const DramConfig &config, PhysAddr addr, std::size_t limit) {
  const auto &cols = config.column_bits;
  const auto masks = config.masks();
  std::vector<PhysAddr> out;
  // Flipping only column bits keeps the row; the bank is kept when every
  // function sees an even number of flips.
  const std::uint64_t subsets = std::uint64_t{1} << std::min<std::size_t>(cols.size(), 20);
  for (std::uint64_t s = 1; s < subsets; ++s) {
    PhysAddr d = 0;
    for (std::size_t i = 0; i < cols.size() && i < 20; ++i) {
      if ((s >> i) & 1) d |= PhysAddr{1} << cols[i];
    }
    if (std::any_of(masks.begin(), masks.end(), [d](BitMask m) { return eval_mask(m, d) != 0; })) continue;
    const PhysAddr a = addr ^ d;
    if ((a >> 12) != (addr >> 12)) out.push_back(a & ~PhysAddr{63});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.size() > limit) out.resize(limit);
  return out;
}

namespace {

AccessClass probe_impl(DramState &state, const ProbePair &pair, Cycles wait, double row_hit_max,
                       VictimRunner *victim, std::optional<Cycles> event_at) {
  if (victim) victim->run_until(state, state.now());
  state.access(pair.p_bar);
  const Cycles until = state.now() + wait;
  if (victim) {
    if (event_at) victim->inject_event(state.now() + *event_at);
    victim->run_until(state, until);
  }
  const auto res = state.access_at(until, pair.p);
  return static_cast<double>(res.latency) <= row_hit_max ? AccessClass::RowHit : AccessClass::RowConflict;
}

}  // namespace

AccessClass probe(DramState &state, const ProbePair &pair, Cycles wait, double row_hit_max, VictimRunner *victim) {
  return probe_impl(state, pair, wait, row_hit_max, victim, std::nullopt);
}

TemplateProfile profile(DramState &state, std::span<const PhysAddr> candidates, const VictimModel &victim,
                        std::uint64_t trials, Cycles wait, double row_hit_max, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::InvalidConfig, "profiling needs at least one trial");
  VictimModel background = victim;
  background.schedule.clear();
  VictimRunner runner(background, derive_seed(seed, Stream::Victim), state.now());

  std::vector<PhysAddr> victim_addrs = victim.targets;
  victim_addrs.insert(victim_addrs.end(), victim.steady_targets.begin(), victim.steady_targets.end());

  TemplateProfile out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateProfile c;
    c.addr = candidates[i];
    c.p_bar = find_conflict_address(state.config(), c.addr, derive_seed(seed, Stream::Profile, i), victim_addrs);
    c.trials = trials;
    const ProbePair pair{c.addr, c.p_bar};
    for (std::uint64_t t = 0; t < trials; ++t) {
      if (probe_impl(state, pair, wait, row_hit_max, &runner, wait / 2) == AccessClass::RowHit) ++c.hits_with_event;
      // Let the rest of the burst play out so it cannot leak into the next trial.
      runner.run_until(state, state.now() + victim.burst_count * victim.burst_spacing + 1);
      if (probe_impl(state, pair, wait, row_hit_max, &runner, std::nullopt) == AccessClass::RowHit) {
        ++c.hits_without_event;
      }
    }
    out.candidates.push_back(c);
  }
  return out;
}

std::vector<CandidateProfile> select_template(const TemplateProfile &profile, std::uint64_t min_hits) {
  std::vector<CandidateProfile> out;
  for (const auto &c : profile.candidates) {
    if (c.hits_without_event == 0 && c.hits_with_event >= min_hits) out.push_back(c);
  }
  if (out.empty()) throw Error(ErrorKind::NoTemplateFound, "no candidate hits only with the event");
  std::stable_sort(out.begin(), out.end(), [](const CandidateProfile &a, const CandidateProfile &b) {
    return a.hits_with_event > b.hits_with_event;
  });
  return out;
}

MonitorResult monitor(DramState &state, const ProbePair &pair, const VictimModel &victim, Cycles duration,
                      Cycles probe_interval, double row_hit_max, std::uint64_t seed) {
  if (probe_interval == 0) throw Error(ErrorKind::InvalidConfig, "probe interval must be positive");
  VictimRunner runner(victim, seed, state.now());
  MonitorResult out;
  const Cycles start = state.now();
  bool in_run = false;
  for (Cycles next = start + probe_interval; next <= start + duration; next += probe_interval) {
    runner.run_until(state, state.now());
    state.access(pair.p_bar);
    const Cycles at = std::max(next, state.now());
    runner.run_until(state, at);
    const auto res = state.access_at(at, pair.p);
    const bool hit = static_cast<double>(res.latency) <= row_hit_max;
    out.trace.push_back({at, hit});
    if (hit && !in_run) out.detections.push_back(at);
    in_run = hit;
  }
  return out;
}

}  // namespace drama
