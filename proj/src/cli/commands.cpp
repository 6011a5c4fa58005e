#include <algorithm>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "drama/attack_utils.hpp"
#include "drama/covert_channel.hpp"
#include "drama/error.hpp"
#include "drama/gap.hpp"
#include "drama/probe_reveng.hpp"
#include "drama/side_channel.hpp"

namespace drama::cli {

using nlohmann::json;

TimingModel TimingOpts::model() const {
  TimingModel m;
  m.noise_stddev = noise;
  m.refresh_interval_cycles = refresh;
  m.validate();
  return m;
}

void TimingOpts::record(json &params) const {
  params["noise"] = noise;
  params["refresh"] = refresh ? json(*refresh) : json(nullptr);
}

namespace {

Manifest manifest(const Globals &g, std::string subcommand, const Source &src) {
  Manifest m;
  m.subcommand = std::move(subcommand);
  m.source = src;
  m.seed = g.seed;
  m.output = g.output;
  return m;
}

json masks_json(std::span<const BitMask> masks) {
  json arr = json::array();
  for (BitMask m : masks) arr.push_back({{"mask", m.to_string()}, {"bits", m.bits()}});
  return arr;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::vector<std::string> histogram_rows(std::span<const double> values, double bin) {
  std::vector<std::string> rows;
  for (const auto &[edge, count] : histogram(values, bin)) rows.push_back(format_number(edge) + "," + std::to_string(count));
  return rows;
}

double row_hit_threshold(const DramState &sim, std::uint64_t seed) {
  DramState cal = sim;
  return calibrate_thresholds(cal, seed).row_hit_max;
}

}  // namespace

int cmd_preset_list(const Globals &g, std::ostream &out) {
  std::ostringstream os;
  for (const auto &name : preset_names()) {
    const auto c = load_preset(name);
    const unsigned channels = 1u << c.count_label(FunctionLabel::Channel);
    os << name << ", B=" << c.bank_bits() << ", " << c.bank_count() << " banks, " << channels
       << (channels == 1 ? " channel" : " channels") << ", " << c.bus_width_bits << "-bit bus\n";
  }
  emit(g, os.str(), out);
  return kOk;
}

int cmd_preset_show(const Globals &g, const PresetShowOpts &o, std::ostream &out) {
  const auto c = load_preset(o.name);
  // Stays loadable through --config: the manifest is just an extra key.
  json doc = to_json(c);
  doc["manifest"] = manifest(g, "preset show", Source{o.name, {}}).to_json();
  emit(g, doc.dump(2) + "\n", out);
  return kOk;
}

int cmd_simulate_access(const Globals &g, const SimulateOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  if (o.addrs.empty()) throw UsageError("simulate access needs at least one --addr");
  DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Simulate));
  json accesses = json::array();
  for (const auto &text : o.addrs) {
    const PhysAddr a = parse_address(text);
    const auto loc = decode(config, a);
    const Cycles at = sim.now();
    const auto res = sim.access_detailed(a, o.cached);
    const char *kind = res.kind == AccessClass::CacheHit ? "cache_hit"
                       : res.kind == AccessClass::RowHit ? "row_hit"
                                                         : "row_conflict";
    accesses.push_back({{"addr", format_address(a)},
                        {"bank", loc.bank.bits},
                        {"row", loc.row},
                        {"column", loc.column},
                        {"issued_at", at},
                        {"latency", res.latency},
                        {"class", kind}});
  }
  auto m = manifest(g, "simulate access", o.src);
  o.timing.record(m.params);
  m.params["addrs"] = o.addrs;
  m.params["cached"] = o.cached;
  emit_json(g, m, json{{"accesses", accesses}}, out);
  return kOk;
}

int cmd_histogram(const Globals &g, const HistogramOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  if (o.bin <= 0) throw UsageError("--bin must be positive");
  DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Histogram));
  std::vector<double> values;
  if (o.pattern == "three-class") {
    for (const auto &s : sample_three_classes(sim, o.samples, derive_seed(g.seed, Stream::Histogram, 1))) {
      values.push_back(s.cycles);
    }
  } else if (o.pattern == "pair") {
    SimulatedOracle oracle(config, o.timing.model(), derive_seed(g.seed, Stream::Oracle));
    if (!o.a.empty() || !o.b.empty()) {
      if (o.a.empty() || o.b.empty()) throw UsageError("--a and --b go together");
      const PhysAddr a = parse_address(o.a);
      const PhysAddr b = parse_address(o.b);
      for (std::size_t i = 0; i < o.samples; ++i) values.push_back(oracle.measure(a, b, 1));
    } else {
      // Pair means of random pool pairs: the shape used to pick the threshold.
      const auto pool = build_pool({0, std::uint64_t{1} << 30}, std::max<std::size_t>(o.samples / 16, 64),
                                   derive_seed(g.seed, Stream::Pool));
      values = build_sets(oracle, pool, 16).pair_means;
    }
  } else {
    throw UsageError("--pattern must be three-class or pair");
  }
  auto m = manifest(g, "histogram", o.src);
  o.timing.record(m.params);
  m.params["pattern"] = o.pattern;
  m.params["samples"] = o.samples;
  m.params["bin"] = o.bin;
  if (!o.a.empty()) m.params["a"] = o.a;
  if (!o.b.empty()) m.params["b"] = o.b;
  emit_csv(g, m, "latency,count", histogram_rows(values, o.bin), out);
  return kOk;
}

int cmd_reveng_timing(const Globals &g, const RevengTimingOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto mode = parse_translation_mode(o.mode);
  const auto region = parse_region(o.region);

  auto m = manifest(g, "reveng timing", o.src);
  o.timing.record(m.params);
  m.params["mode"] = o.mode;
  m.params["region"] = o.region;
  m.params["pool"] = o.pool;
  m.params["probes"] = o.probes;
  m.params["reps"] = o.reps;
  m.params["max_weight"] = o.max_weight;
  m.params["verify_trials"] = o.verify_trials;
  m.params["check"] = o.check;
  m.params["histogram"] = o.histogram_path.empty() ? json(nullptr) : json(o.histogram_path);

  SimulatedOracle oracle(config, o.timing.model(), derive_seed(g.seed, Stream::Oracle), mode);
  const auto pool = build_pool(region, o.pool, derive_seed(g.seed, Stream::Pool));
  const auto sets = build_sets(oracle, pool, o.probes, o.reps);
  if (!o.histogram_path.empty()) {
    Globals hg = g;
    hg.output = o.histogram_path;
    emit_csv(hg, m, "latency,count", histogram_rows(sets.pair_means, o.bin), out);
  }
  const auto recovered = reconstruct_functions(sets, mode, o.max_weight);

  json result;
  result["mode"] = o.mode;
  result["threshold"] = sets.threshold;
  json jsets = json::array();
  for (const auto &s : sets.sets) {
    json addrs = json::array();
    for (PhysAddr a : s) addrs.push_back(format_address(a));
    jsets.push_back({{"size", s.size()}, {"addresses", addrs}});
  }
  result["sets"] = jsets;
  result["bit_universe"] = recovered.bit_universe.bits();
  result["candidates"] = recovered.candidates;
  result["functions"] = masks_json(recovered.masks);

  if (o.verify_trials > 0) {
    const auto rep = verify_functions(recovered.masks, oracle, sets.threshold, o.verify_trials, region,
                                      derive_seed(g.seed, Stream::Verify), o.reps);
    result["verification"] = {{"agreement_rate", rep.agreement_rate},
                              {"trials", rep.trials},
                              {"predicted_same_bank", rep.predicted_same},
                              {"measured_conflict", rep.measured_conflict}};
  }

  int code = kOk;
  if (o.check) {
    const auto truth = config.masks();
    const auto expected = restrict_span(truth, search_universe(mode));
    const bool equal = spans_equal(recovered.masks, expected);
    result["check"] = {{"expected", masks_json(expected)},
                       {"spans_equal", equal},
                       {"restricted", mode != TranslationMode::Full || !spans_equal(expected, truth)}};
    if (!equal) code = kAnalysisFailure;
  }
  emit_json(g, m, result, out);
  return code;
}

int cmd_reveng_probe(const Globals &g, const RevengProbeOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  std::vector<ProbeObservation> obs;
  if (!o.observations.empty()) {
    std::ifstream in(o.observations);
    if (!in) throw UsageError("cannot read observations file " + o.observations);
    obs = read_observations(in);
  } else {
    obs = generate_all_observations(config, o.samples, derive_seed(g.seed, Stream::Probe));
  }
  if (!o.observations_out.empty()) {
    std::ostringstream os;
    write_observations(os, obs);
    write_atomic(o.observations_out, os.str());
  }

  const auto selectors = slot_selectors(config);
  std::vector<std::string> pins;
  for (const auto &f : config.functions) {
    if (f.label && std::find(selectors.begin(), selectors.end(), *f.label) == selectors.end()) {
      pins.emplace_back(to_string(*f.label));
    }
  }
  const auto found = solve_all_pins(obs, selectors, pins);

  json functions = json::array();
  std::vector<BitMask> masks;
  for (const auto &f : found) {
    masks.push_back(f.mask);
    functions.push_back({{"label", f.label ? json(std::string(to_string(*f.label))) : json(nullptr)},
                         {"mask", f.mask.to_string()},
                         {"bits", f.mask.bits()}});
  }
  json result;
  result["observations"] = obs.size();
  result["functions"] = functions;

  int code = kOk;
  if (o.check) {
    bool exact = found.size() == config.functions.size();
    for (const auto &f : found) {
      const auto idx = f.label ? config.find(*f.label) : std::nullopt;
      exact = exact && idx && config.functions[*idx].mask == f.mask;
    }
    result["check"] = {{"exact", exact}, {"spans_equal", spans_equal(masks, config.masks())}};
    if (!exact) code = kAnalysisFailure;
  }
  auto m = manifest(g, "reveng probe", o.src);
  m.params["samples"] = o.samples;
  m.params["observations"] = o.observations.empty() ? json(nullptr) : json(o.observations);
  m.params["observations_out"] = o.observations_out.empty() ? json(nullptr) : json(o.observations_out);
  m.params["check"] = o.check;
  emit_json(g, m, result, out);
  return code;
}

namespace {

FramingConfig framing_from(const CovertOpts &o) {
  FramingConfig f;
  f.block_period_cycles = o.period;
  f.sync = parse_sync_mode(o.sync);
  f.receiver_probes_per_block = o.probes;
  f.background_noise_rate = o.noise_rate;
  f.receiver_offset_cycles = o.offset;
  return f;
}

void record_covert(Manifest &m, const CovertOpts &o) {
  o.timing.record(m.params);
  m.params["tuples"] = o.tuples;
  m.params["sync"] = o.sync;
  m.params["probes"] = o.probes;
  m.params["noise_rate"] = o.noise_rate;
  m.params["offset"] = o.offset;
}

std::string bits_to_hex(std::span<const std::uint8_t> bits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int v = 0;
    for (std::size_t j = 0; j < 4; ++j) v = (v << 1) | (i + j < bits.size() ? bits[i + j] : 0);
    s.push_back(kDigits[v]);
  }
  return s;
}

}  // namespace

int cmd_covert_run(const Globals &g, const CovertOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto framing = framing_from(o);
  const auto tuples = select_tuples(config, o.tuples, derive_seed(g.seed, Stream::Tuples));
  const unsigned per_block = framing.bits_per_block(tuples.tuples.size());
  std::vector<std::uint8_t> payload;
  if (!o.payload.empty()) {
    payload = bits_from_hex(o.payload);
  } else {
    const std::size_t blocks = std::max<std::size_t>(1, (o.bits + per_block - 1) / per_block);
    payload = random_payload(blocks * per_block, derive_seed(g.seed, Stream::Payload));
  }
  DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Simulate));
  const auto tx = transmit(sim, tuples, framing, payload, derive_seed(g.seed, Stream::Covert));

  const auto &r = tx.report;
  json jt = json::array();
  for (const auto &t : tuples.tuples) {
    jt.push_back({{"bank", t.bank.bits}, {"sender", format_address(t.sender)}, {"receiver", format_address(t.receiver)}});
  }
  json result{{"raw_bitrate", r.raw_bitrate},
              {"error_probability", r.error_probability},
              {"capacity", r.capacity},
              {"block_period_cycles", r.block_period_cycles},
              {"bits_per_block", r.bits_per_block},
              {"payload_bits", r.payload_bits},
              {"bit_errors", r.bit_errors},
              {"payload", bits_to_hex(payload)},
              {"received", bits_to_hex(tx.received)},
              {"tuples", jt}};
  auto m = manifest(g, "covert run", o.src);
  record_covert(m, o);
  m.params["period"] = o.period;
  m.params["payload"] = o.payload.empty() ? json(nullptr) : json(o.payload);
  m.params["bits"] = o.bits;
  emit_json(g, m, result, out);
  return kOk;
}

int cmd_covert_sweep(const Globals &g, const CovertOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  if (o.periods.empty()) throw UsageError("covert sweep needs --periods");
  const auto framing = framing_from(o);
  const auto tuples = select_tuples(config, o.tuples, derive_seed(g.seed, Stream::Tuples));
  const DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Simulate));
  const auto reports = run_sweep(sim, tuples, framing, o.periods, o.bits, derive_seed(g.seed, Stream::Covert));
  std::vector<std::string> rows;
  for (const auto &r : reports) {
    rows.push_back(std::to_string(r.block_period_cycles) + "," + format_number(r.raw_bitrate) + "," +
                   format_number(r.error_probability) + "," + format_number(r.capacity));
  }
  auto m = manifest(g, "covert sweep", o.src);
  record_covert(m, o);
  m.params["periods"] = o.periods;
  m.params["bits"] = o.bits;
  emit_csv(g, m, "period,raw_bps,error,capacity_bps", rows, out);
  return kOk;
}

namespace {

VictimModel load_victim(const std::string &path) {
  if (path.empty()) throw UsageError("--victim is required");
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read victim file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception &e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return victim_from_json(doc);
}

// Uniform attacker lines plus, per victim target, lines on other pages that
// share its row (the part of a full memory scan that can matter).
std::vector<PhysAddr> template_candidates(const DramConfig &config, const VictimModel &victim, std::size_t count,
                                          std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  std::vector<PhysAddr> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(line(rng) << 6);
  for (PhysAddr t : victim.targets) {
    for (PhysAddr a : same_row_addresses(config, t, 8)) out.push_back(a);
  }
  auto is_victim = [&](PhysAddr a) {
    return std::find(victim.targets.begin(), victim.targets.end(), a) != victim.targets.end() ||
           std::find(victim.steady_targets.begin(), victim.steady_targets.end(), a) != victim.steady_targets.end();
  };
  out.erase(std::remove_if(out.begin(), out.end(), is_victim), out.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void record_side(Manifest &m, const SideChannelOpts &o) {
  o.timing.record(m.params);
  m.params["victim"] = o.victim;
  m.params["trials"] = o.trials;
  m.params["candidates"] = o.candidates;
  m.params["wait"] = o.wait;
  m.params["min_hits"] = o.min_hits;
}

json candidate_json(const CandidateProfile &c) {
  return {{"addr", format_address(c.addr)},
          {"p_bar", format_address(c.p_bar)},
          {"hits_with_event", c.hits_with_event},
          {"hits_without_event", c.hits_without_event},
          {"trials", c.trials}};
}

}  // namespace

int cmd_sidechannel_template(const Globals &g, const SideChannelOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto victim = load_victim(o.victim);
  DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Simulate));
  const double row_hit_max = row_hit_threshold(sim, derive_seed(g.seed, Stream::Histogram));
  const auto candidates = template_candidates(config, victim, o.candidates, derive_seed(g.seed, Stream::Profile, 1));
  const auto prof = profile(sim, candidates, victim, o.trials, o.wait, row_hit_max, derive_seed(g.seed, Stream::Profile));

  json result;
  const auto geo = row_geometry(config);
  result["row_geometry"] = {{"pages_per_row", geo.pages_per_row}, {"bytes_per_page_per_row", geo.bytes_per_page_per_row}};
  result["row_hit_max"] = row_hit_max;
  json hit = json::array();
  std::size_t false_positives = 0;
  for (const auto &c : prof.candidates) {
    if (c.hits_with_event + c.hits_without_event > 0) hit.push_back(candidate_json(c));
    if (c.hits_without_event > 0) ++false_positives;
  }
  result["profiled"] = prof.candidates.size();
  result["with_hits"] = hit;
  result["false_positives"] = false_positives;
  auto m = manifest(g, "sidechannel template", o.src);
  record_side(m, o);
  int code = kOk;
  try {
    json sel = json::array();
    for (const auto &c : select_template(prof, o.min_hits)) sel.push_back(candidate_json(c));
    result["selected"] = sel;
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::NoTemplateFound) throw;
    result["selected"] = json::array();
    result["error"] = error_json(std::string(to_string(e.kind())), e.what());
    code = kAnalysisFailure;
  }
  emit_json(g, m, result, out);
  return code;
}

int cmd_sidechannel_monitor(const Globals &g, const SideChannelOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto victim = load_victim(o.victim);
  DramState sim(config, o.timing.model(), derive_seed(g.seed, Stream::Simulate));
  const double row_hit_max = row_hit_threshold(sim, derive_seed(g.seed, Stream::Histogram));

  ProbePair pair;
  if (!o.p.empty()) {
    pair.p = parse_address(o.p);
    pair.p_bar = o.p_bar.empty() ? find_conflict_address(config, pair.p, derive_seed(g.seed, Stream::Profile, 2),
                                                         victim.targets)
                                 : parse_address(o.p_bar);
  } else {
    DramState scratch = sim;
    const auto candidates =
        template_candidates(config, victim, o.candidates, derive_seed(g.seed, Stream::Profile, 1));
    const auto prof =
        profile(scratch, candidates, victim, o.trials, o.wait, row_hit_max, derive_seed(g.seed, Stream::Profile));
    const auto best = select_template(prof, o.min_hits).front();
    pair = {best.addr, best.p_bar};
  }
  if (!valid_probe_pair(config, pair)) throw UsageError("--p and --p-bar must share a bank and differ in row");

  Cycles duration = o.duration;
  if (duration == 0) {
    const Cycles last = victim.schedule.empty() ? 0 : *std::max_element(victim.schedule.begin(), victim.schedule.end());
    duration = last + victim.burst_count * victim.burst_spacing + 4 * o.interval;
  }
  const auto res = monitor(sim, pair, victim, duration, o.interval, row_hit_max, derive_seed(g.seed, Stream::Victim));

  std::vector<std::string> rows;
  for (const auto &s : res.trace) rows.push_back(std::to_string(s.cycle) + "," + (s.row_hit ? "1" : "0"));
  auto m = manifest(g, "sidechannel monitor", o.src);
  record_side(m, o);
  m.params["p"] = format_address(pair.p);
  m.params["p_bar"] = format_address(pair.p_bar);
  m.params["duration"] = duration;
  m.params["interval"] = o.interval;
  m.params["detections"] = res.detections.size();
  emit_csv(g, m, "cycle,detected", rows, out);
  return kOk;
}

int cmd_rowhammer_pairs(const Globals &g, const RowhammerOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto region = parse_region(o.region);
  const auto triples = find_double_sided_pairs(config, region, o.row);
  json arr = json::array();
  for (const auto &t : triples) {
    arr.push_back({{"bank", t.bank.bits},
                   {"lower", format_address(t.lower)},
                   {"victim_row", t.victim_row},
                   {"upper", format_address(t.upper)}});
  }
  auto m = manifest(g, "rowhammer pairs", o.src);
  m.params["region"] = o.region;
  m.params["row"] = o.row ? json(*o.row) : json(nullptr);
  emit_json(g, m, json{{"count", triples.size()}, {"triples", arr}}, out);
  return kOk;
}

int cmd_analyze_bank_prob(const Globals &g, const BankProbOpts &o, std::ostream &out) {
  const auto config = o.src.load();
  const auto p = same_bank_probability(config, o.trials, derive_seed(g.seed, Stream::MonteCarlo));
  json result{{"bank_bits", config.bank_bits()}, {"exact", p.exact}};
  if (p.estimate) {
    result["estimate"] = *p.estimate;
    result["trials"] = p.trials;
    result["sigma"] = p.sigma;
    result["deviation_sigmas"] = p.sigma > 0 ? (*p.estimate - p.exact) / p.sigma : 0.0;
  }
  auto m = manifest(g, "analyze bank-prob", o.src);
  m.params["trials"] = o.trials ? json(*o.trials) : json(nullptr);
  emit_json(g, m, result, out);
  return kOk;
}

}  // namespace drama::cli
