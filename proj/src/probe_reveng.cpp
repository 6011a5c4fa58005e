#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "drama/error.hpp"
#include "drama/probe_reveng.hpp"
#include "drama/rng.hpp"

namespace drama {

namespace {

bool is_selector(FunctionLabel l) {
  return l == FunctionLabel::CPU || l == FunctionLabel::Channel || l == FunctionLabel::DIMM;
}

// Top-down order used when solving: CPU, then Channel, then DIMM.
int hierarchy_rank(FunctionLabel l) {
  switch (l) {
    case FunctionLabel::CPU: return 0;
    case FunctionLabel::Channel: return 1;
    case FunctionLabel::DIMM: return 2;
    default: return 3;
  }
}

std::optional<unsigned> parse_cs_pin(std::string_view pin) {
  if (pin.size() < 3 || pin.substr(0, 2) != "CS") return std::nullopt;
  unsigned slot = 0;
  auto [ptr, ec] = std::from_chars(pin.data() + 2, pin.data() + pin.size(), slot);
  if (ec != std::errc() || ptr != pin.data() + pin.size()) return std::nullopt;
  return slot;
}

}  // namespace

BitMask probe_universe() { return BitMask::range(6, 29); }

std::vector<FunctionLabel> slot_selectors(const DramConfig &config) {
  std::vector<FunctionLabel> out;
  for (const auto &f : config.functions) {
    if (f.label && is_selector(*f.label)) out.push_back(*f.label);
  }
  return out;
}

unsigned dimm_slot_count(const DramConfig &config) { return 1u << slot_selectors(config).size(); }

unsigned dimm_slot(const DramConfig &config, PhysAddr addr) {
  unsigned slot = 0;
  unsigned bit = 0;
  for (const auto &f : config.functions) {
    if (f.label && is_selector(*f.label)) slot |= eval_mask(f.mask, addr) << bit++;
  }
  return slot;
}

std::vector<std::string> probe_pins(const DramConfig &config) {
  std::vector<std::string> pins;
  for (const auto &f : config.functions) {
    if (f.label) pins.emplace_back(to_string(*f.label));
  }
  for (unsigned s = 0; s < dimm_slot_count(config); ++s) pins.push_back("CS" + std::to_string(s));
  return pins;
}

unsigned simulate_probe(const DramConfig &config, PhysAddr addr, std::string_view pin) {
  if (auto slot = parse_cs_pin(pin)) {
    if (*slot >= dimm_slot_count(config)) {
      throw Error(ErrorKind::UnknownPin, "no DIMM slot behind pin '" + std::string(pin) + "'");
    }
    return dimm_slot(config, addr) == *slot ? 1u : 0u;
  }
  FunctionLabel label;
  try {
    label = parse_label(pin);
  } catch (const Error &) {
    throw Error(ErrorKind::UnknownPin, "unknown pin '" + std::string(pin) + "'");
  }
  const auto idx = config.find(label);
  if (!idx) throw Error(ErrorKind::UnknownPin, "config '" + config.name + "' has no pin " + std::string(pin));
  return eval_mask(config.functions[*idx].mask, addr);
}

std::vector<ProbeObservation> generate_observations(const DramConfig &config, std::string_view pin, std::size_t count,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  std::vector<ProbeObservation> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const PhysAddr a = line(rng) << 6;
    out.push_back({a, std::string(pin), simulate_probe(config, a, pin)});
  }
  return out;
}

std::vector<ProbeObservation> generate_all_observations(const DramConfig &config, std::size_t count,
                                                        std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> line(0, (std::uint64_t{1} << 24) - 1);
  const auto pins = probe_pins(config);
  std::vector<ProbeObservation> out;
  for (std::size_t i = 0; i < count; ++i) {
    const PhysAddr a = line(rng) << 6;
    for (const auto &p : pins) out.push_back({a, p, simulate_probe(config, a, p)});
  }
  return out;
}

AddressFunction solve_pin_function(const std::vector<ProbeObservation> &obs, const AddressFilter &filter) {
  if (obs.empty()) throw Error(ErrorKind::Underdetermined, "no observations");
  const std::string &pin = obs.front().pin;
  Gf2System sys;
  sys.universe = probe_universe();
  for (const auto &o : obs) {
    if (o.pin != pin) {
      throw Error(ErrorKind::InvalidConfig, "observations mix pins '" + pin + "' and '" + o.pin + "'");
    }
    if (filter && !filter(o.addr)) continue;
    sys.add(o.addr, o.value);
  }
  AddressFunction f;
  try {
    f.mask = solve_system(sys);
  } catch (const UnderdeterminedError &e) {
    throw UnderdeterminedError("pin " + pin + ": " + e.what(), e.free_bits());
  } catch (const Error &e) {
    throw Error(e.kind(), "pin " + pin + ": " + e.what());
  }
  try {
    f.label = parse_label(pin);
  } catch (const Error &) {
    // CS pins and unnamed pins stay unlabeled.
  }
  return f;
}

unsigned combine_chip_selects(const std::map<unsigned, unsigned> &cs_values) {
  unsigned v = 0;
  for (const auto &[slot, bit] : cs_values) v |= bit & 1u;
  return v;
}

std::vector<AddressFunction> solve_all_pins(const std::vector<ProbeObservation> &obs,
                                            const std::vector<FunctionLabel> &selectors,
                                            const std::vector<std::string> &pins) {
  // Per-address chip-select levels.
  std::map<PhysAddr, std::map<unsigned, unsigned>> cs;
  std::map<std::string, std::vector<ProbeObservation>> by_pin;
  for (const auto &o : obs) {
    if (auto slot = parse_cs_pin(o.pin)) {
      cs[o.addr][*slot] = o.value;
    } else {
      by_pin[o.pin].push_back(o);
    }
  }

  std::vector<std::size_t> order(selectors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return hierarchy_rank(selectors[a]) < hierarchy_rank(selectors[b]);
  });

  std::vector<AddressFunction> out;
  std::vector<BitMask> routing;  // CPU / Channel masks gating the probed bus
  for (std::size_t bit : order) {
    std::vector<ProbeObservation> derived;
    for (const auto &[addr, levels] : cs) {
      std::map<unsigned, unsigned> half;
      for (const auto &[slot, v] : levels) {
        if ((slot >> bit) & 1u) half[slot] = v;
      }
      if (half.empty()) continue;
      derived.push_back({addr, std::string(to_string(selectors[bit])), combine_chip_selects(half)});
    }
    AddressFunction f = solve_pin_function(derived);
    out.push_back(f);
    if (selectors[bit] != FunctionLabel::DIMM) routing.push_back(f.mask);
  }

  // On a real bus the bank pins only carry the address when it is routed to
  // the probed DIMM. Those captures are retried with that filter; it leaves
  // the mask defined up to the XOR of the routing masks.
  const AddressFilter on_probed_bus = [routing](PhysAddr a) {
    return std::all_of(routing.begin(), routing.end(), [a](BitMask m) { return eval_mask(m, a) == 1; });
  };
  for (const auto &pin : pins) {
    auto it = by_pin.find(pin);
    if (it == by_pin.end()) throw Error(ErrorKind::UnknownPin, "no observations for pin " + pin);
    try {
      out.push_back(solve_pin_function(it->second));
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::Inconsistent || routing.empty()) throw;
      out.push_back(solve_pin_function(it->second, on_probed_bus));
    }
  }
  return out;
}

void write_observations(std::ostream &os, const std::vector<ProbeObservation> &obs) {
  for (const auto &o : obs) {
    nlohmann::json j;
    j["addr"] = format_address(o.addr);
    j["pin"] = o.pin;
    j["value"] = o.value;
    os << j.dump() << '\n';
  }
}

std::vector<ProbeObservation> read_observations(std::istream &is) {
  std::vector<ProbeObservation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ProbeObservation o;
      o.addr = parse_address(j.at("addr").get<std::string>());
      o.pin = j.at("pin").get<std::string>();
      const auto v = j.at("value").get<int>();
      if (v != 0 && v != 1) throw Error(ErrorKind::Parse, "value must be 0 or 1");
      o.value = static_cast<unsigned>(v);
      out.push_back(std::move(o));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::Parse, "observation line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error &e) {
      throw Error(ErrorKind::Parse, "observation line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace drama
