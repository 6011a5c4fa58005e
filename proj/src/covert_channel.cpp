#include <algorithm>
#include <cmath>
#include <set>

#include "drama/covert_channel.hpp"
#include "drama/error.hpp"

namespace drama {

TupleSet select_tuples(const DramConfig &config, std::size_t count, std::uint64_t seed, AddressRegion region) {
  if (count == 0) throw Error(ErrorKind::InvalidFraming, "need at least one tuple");
  if (count > config.bank_count()) {
    throw Error(ErrorKind::InvalidFraming, "config has " + std::to_string(config.bank_count()) + " banks, " +
                                               std::to_string(count) + " tuples requested");
  }
  if (region.size < 128) throw Error(ErrorKind::RegionTooSmall, "tuple region is too small");
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, region.size / 64 - 1);
  auto draw = [&] { return region.base + line(rng) * 64; };

  TupleSet out;
  std::set<std::uint32_t> used;
  // Bounded so an impossible request (a bank with a single row in the region) terminates.
  for (std::uint64_t attempts = 0; out.tuples.size() < count; ++attempts) {
    if (attempts > 64 * count * config.bank_count() + 4096) {
      throw Error(ErrorKind::InvalidFraming, "region does not offer enough banks with two rows");
    }
    const PhysAddr s = draw();
    const auto bank = config.bank_of(s);
    if (used.count(bank.bits)) continue;
    const auto row = config.row_of(s);
    for (std::uint64_t tries = 0; tries < 64 * config.bank_count(); ++tries) {
      const PhysAddr r = draw();
      if (config.bank_of(r) == bank && config.row_of(r) != row) {
        out.tuples.push_back({bank, s, r});
        used.insert(bank.bits);
        break;
      }
    }
  }
  return out;
}

std::string_view to_string(SyncMode mode) { return mode == SyncMode::WallClock ? "wall" : "clock"; }

SyncMode parse_sync_mode(std::string_view text) {
  if (text == "wall") return SyncMode::WallClock;
  if (text == "clock") return SyncMode::EmbeddedClock;
  throw Error(ErrorKind::Parse, "unknown sync mode '" + std::string(text) + "' (wall|clock)");
}

unsigned FramingConfig::bits_per_block(std::size_t tuple_count) const {
  const auto t = static_cast<unsigned>(tuple_count);
  return sync == SyncMode::WallClock ? t : (t == 0 ? 0 : t - 1);
}

double binary_entropy(double e) {
  if (e <= 0.0 || e >= 1.0) return 0.0;
  return -e * std::log2(e) - (1 - e) * std::log2(1 - e);
}

double capacity(double raw_bitrate, double e) { return raw_bitrate * (1 - binary_entropy(e)); }

std::vector<std::uint8_t> random_payload(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> out(count);
  for (auto &b : out) b = static_cast<std::uint8_t>(rng() & 1);
  return out;
}

std::vector<std::uint8_t> bits_from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty()) throw Error(ErrorKind::Parse, "empty hex payload");
  std::vector<std::uint8_t> out;
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      throw Error(ErrorKind::Parse, std::string("bad hex digit '") + c + "'");
    }
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((v >> i) & 1));
  }
  return out;
}

namespace {

double calibrate_receiver(const DramState &sim, const Tuple &t) {
  DramState cal = sim;  // calibration must not disturb the shared machine
  std::vector<double> samples;
  for (int i = 0; i < 64; ++i) {
    cal.access(t.receiver);
    samples.push_back(static_cast<double>(cal.access(t.receiver)));
    cal.access(t.sender);
    samples.push_back(static_cast<double>(cal.access(t.receiver)));
  }
  return find_conflict_threshold(samples);
}

struct Round {
  Cycles start = 0;
  std::vector<std::uint8_t> conflict;  // one classified probe per tuple
};

// Active tuple indices per sender block.
std::vector<std::vector<unsigned>> sender_plan(const TupleSet &tuples, const FramingConfig &f,
                                               std::span<const std::uint8_t> payload) {
  const auto n = static_cast<unsigned>(tuples.tuples.size());
  const unsigned per_block = f.bits_per_block(n);
  const std::size_t payload_blocks = payload.size() / per_block;
  std::vector<std::vector<unsigned>> plan;
  auto add_block = [&](bool clock, auto data_bit) {
    std::vector<unsigned> active;
    if (clock) active.push_back(0);
    const unsigned first = f.sync == SyncMode::WallClock ? 0 : 1;
    for (unsigned i = first; i < n; ++i) {
      if (data_bit(i - first)) active.push_back(i);
    }
    plan.push_back(std::move(active));
  };

  if (f.sync == SyncMode::WallClock) {
    for (std::size_t k = 0; k < payload_blocks; ++k) {
      add_block(false, [&](unsigned i) { return payload[k * per_block + i] != 0; });
    }
    return plan;
  }
  // Preamble, start-of-frame block (all data ones), payload, trailer. The
  // clock level is 1 in even blocks so every boundary is a transition.
  auto clock_level = [&](std::size_t k) {
    if (f.clock_halt_block && k >= *f.clock_halt_block) return false;
    return k % 2 == 0;
  };
  for (unsigned k = 0; k < kPreambleBlocks; ++k) add_block(clock_level(plan.size()), [](unsigned) { return false; });
  add_block(clock_level(plan.size()), [](unsigned) { return true; });
  for (std::size_t k = 0; k < payload_blocks; ++k) {
    add_block(clock_level(plan.size()), [&](unsigned i) { return payload[k * per_block + i] != 0; });
  }
  add_block(clock_level(plan.size()), [](unsigned) { return false; });
  return plan;
}

bool majority(const std::vector<Round> &rounds, std::size_t from, std::size_t to, unsigned tuple, Rng &coin) {
  std::size_t hits = 0;
  std::size_t n = 0;
  for (std::size_t r = from; r < to; ++r) {
    if (tuple < rounds[r].conflict.size()) {
      hits += rounds[r].conflict[tuple];
      ++n;
    }
  }
  if (n == 0) return coin() & 1;  // nothing observed: the receiver has to guess
  return 2 * hits > n;
}

std::vector<std::uint8_t> decode_wall(const std::vector<Round> &rounds, unsigned n, std::size_t blocks, Cycles t0,
                                      Cycles period, Rng &coin) {
  // Round r belongs to the block its first probe falls in.
  std::vector<std::size_t> first(blocks + 1, rounds.size());
  for (std::size_t r = rounds.size(); r-- > 0;) {
    const auto k = static_cast<std::size_t>((rounds[r].start - t0) / period);
    if (k < blocks) first[k] = r;
  }
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < blocks; ++k) {
    std::size_t end = first[k];
    while (end < rounds.size() && (rounds[end].start - t0) / period == k) ++end;
    for (unsigned i = 0; i < n; ++i) out.push_back(majority(rounds, first[k], end, i, coin) ? 1 : 0);
  }
  return out;
}

std::vector<std::uint8_t> decode_clock(const std::vector<Round> &rounds, unsigned n, std::size_t payload_blocks,
                                       Cycles rx_start, Cycles period, Rng &coin) {
  // Clock edges: tuple 0 changes level and holds it for two rounds.
  std::vector<std::size_t> edges;
  if (!rounds.empty()) {
    std::uint8_t level = rounds[0].conflict[0];
    for (std::size_t r = 1; r + 1 < rounds.size(); ++r) {
      if (rounds[r].conflict[0] != level && rounds[r + 1].conflict[0] != level) {
        level = rounds[r].conflict[0];
        edges.push_back(r);
      }
    }
  }

  auto lost = [&](Cycles since) {
    throw Error(ErrorKind::ClockLost, "no clock transition within two block periods after cycle " +
                                          std::to_string(since));
  };
  Cycles last = rx_start;
  std::size_t need = 0;  // blocks still to read once the start-of-frame block is seen
  bool framed = false;
  std::vector<std::uint8_t> out;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Cycles at = rounds[edges[e]].start;
    if (at - last > 2 * period) lost(last);
    last = at;
    if (e == 0) continue;  // the stretch before the first edge is a partial block
    std::vector<std::uint8_t> bits;
    for (unsigned i = 1; i < n; ++i) bits.push_back(majority(rounds, edges[e - 1], edges[e], i, coin) ? 1 : 0);
    if (!framed) {
      framed = std::all_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b == 1; });
      need = payload_blocks;
      continue;
    }
    if (need == 0) break;
    out.insert(out.end(), bits.begin(), bits.end());
    --need;
  }
  if (!framed || need > 0) lost(last);
  return out;
}

}  // namespace

Transmission transmit(DramState &sim, const TupleSet &tuples, const FramingConfig &framing,
                      std::span<const std::uint8_t> payload, std::uint64_t seed) {
  const auto n = static_cast<unsigned>(tuples.tuples.size());
  if (n == 0) throw Error(ErrorKind::InvalidFraming, "no tuples");
  if (framing.sync == SyncMode::EmbeddedClock && n < 2) {
    throw Error(ErrorKind::InvalidFraming, "an embedded clock needs at least two tuples");
  }
  const unsigned per_block = framing.bits_per_block(n);
  if (payload.empty() || payload.size() % per_block != 0) {
    throw Error(ErrorKind::InvalidFraming, "payload of " + std::to_string(payload.size()) +
                                               " bits is not a positive multiple of " + std::to_string(per_block) +
                                               " bits per block");
  }
  if (framing.block_period_cycles == 0) throw Error(ErrorKind::InvalidFraming, "block period must be positive");
  if (framing.receiver_probes_per_block == 0) throw Error(ErrorKind::InvalidFraming, "receiver needs probes");
  for (const auto &t : tuples.tuples) {
    const auto &c = sim.config();
    if (!same_bank(c, t.sender, t.receiver) || c.row_of(t.sender) == c.row_of(t.receiver)) {
      throw Error(ErrorKind::InvalidFraming, "tuple addresses must share a bank and differ in row");
    }
  }

  const double threshold = framing.threshold ? *framing.threshold : calibrate_receiver(sim, tuples.tuples[0]);
  const auto plan = sender_plan(tuples, framing, payload);
  const Cycles period = framing.block_period_cycles;
  const Cycles slot = std::max<Cycles>(1, period / framing.receiver_probes_per_block);
  const Cycles t0 = sim.now();
  const Cycles sender_end = t0 + plan.size() * period;
  const bool wall = framing.sync == SyncMode::WallClock;
  const Cycles rx_start = t0 + (wall ? 0 : framing.receiver_offset_cycles);
  const Cycles rx_end = wall ? sender_end : sender_end + 2 * period;

  Rng jitter_rng(seed);
  Rng coin(derive_seed(seed, Stream::Covert, 1));
  Rng noise_rng(derive_seed(seed, Stream::Covert, 2));
  std::uniform_int_distribution<Cycles> jitter(0, framing.overhead_jitter_cycles);
  std::uniform_int_distribution<std::uint64_t> noise_line(0, (std::uint64_t{1} << 24) - 1);
  std::exponential_distribution<double> noise_gap(framing.background_noise_rate > 0 ? framing.background_noise_rate
                                                                                    : 1.0);
  auto after = [&](Cycles done) { return done + framing.access_overhead_cycles + jitter(jitter_rng); };

  constexpr Cycles kNever = ~Cycles{0};
  Cycles tx_next = t0;
  std::size_t tx_block = ~std::size_t{0};
  std::size_t tx_rr = 0;
  Cycles rx_next = rx_start;
  std::uint64_t rx_round = 0;
  unsigned rx_tuple = 0;
  std::vector<Round> rounds;
  double noise_clock = static_cast<double>(t0);
  Cycles noise_next = kNever;
  auto schedule_noise = [&] {
    noise_clock += noise_gap(noise_rng);
    noise_next = noise_clock < static_cast<double>(rx_end) ? static_cast<Cycles>(noise_clock) : kNever;
  };
  if (framing.background_noise_rate > 0) schedule_noise();

  while (tx_next != kNever || rx_next != kNever || noise_next != kNever) {
    if (tx_next <= rx_next && tx_next <= noise_next) {
      const auto k = static_cast<std::size_t>((std::max(tx_next, t0) - t0) / period);
      if (k >= plan.size()) {
        tx_next = kNever;
        continue;
      }
      if (k != tx_block) {
        tx_block = k;
        tx_rr = 0;
      }
      const auto &active = plan[k];
      if (active.empty()) {
        tx_next = t0 + (k + 1) * period;
        continue;
      }
      sim.access_at(tx_next, tuples.tuples[active[tx_rr++ % active.size()]].sender);
      tx_next = after(sim.now());
    } else if (rx_next <= noise_next) {
      if (rx_tuple == 0) {
        if (rx_next >= rx_end) {
          rx_next = kNever;
          continue;
        }
        rounds.push_back({std::max(rx_next, sim.now()), {}});
      }
      const auto res = sim.access_at(rx_next, tuples.tuples[rx_tuple].receiver);
      rounds.back().conflict.push_back(static_cast<double>(res.latency) > threshold ? 1 : 0);
      if (++rx_tuple < n) {
        rx_next = after(sim.now());
      } else {
        rx_tuple = 0;
        ++rx_round;
        rx_next = std::max(rx_start + rx_round * slot, after(sim.now()));
      }
    } else {
      sim.access_at(noise_next, noise_line(noise_rng) << 6);
      schedule_noise();
    }
  }

  Transmission out;
  if (wall) {
    out.received = decode_wall(rounds, n, plan.size(), t0, period, coin);
  } else {
    out.received = decode_clock(rounds, n, payload.size() / per_block, rx_start, period, coin);
  }

  auto &rep = out.report;
  rep.block_period_cycles = period;
  rep.bits_per_block = per_block;
  rep.payload_bits = payload.size();
  for (std::size_t i = 0; i < payload.size(); ++i) rep.bit_errors += (payload[i] != out.received[i]) ? 1 : 0;
  rep.raw_bitrate = per_block * framing.clock_hz / static_cast<double>(period);
  rep.error_probability = static_cast<double>(rep.bit_errors) / static_cast<double>(payload.size());
  rep.capacity = capacity(rep.raw_bitrate, rep.error_probability);
  return out;
}

std::vector<TransmissionReport> run_sweep(const DramState &sim, const TupleSet &tuples, FramingConfig framing,
                                          std::span<const Cycles> periods, std::size_t payload_len,
                                          std::uint64_t seed) {
  if (periods.empty()) throw Error(ErrorKind::InvalidFraming, "sweep needs at least one period");
  const unsigned per_block = framing.bits_per_block(tuples.tuples.size());
  if (per_block == 0) throw Error(ErrorKind::InvalidFraming, "no payload tuples");
  const std::size_t len = std::max<std::size_t>(1, (payload_len + per_block - 1) / per_block) * per_block;
  std::vector<TransmissionReport> out;
  for (std::size_t i = 0; i < periods.size(); ++i) {
    DramState run = sim;
    framing.block_period_cycles = periods[i];
    const auto payload = random_payload(len, derive_seed(seed, Stream::Payload, i));
    out.push_back(transmit(run, tuples, framing, payload, derive_seed(seed, Stream::Covert, i)).report);
  }
  return out;
}

}  // namespace drama
