#pragma once

#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "drama/dram_config.hpp"

namespace drama {

/// One recorded logic level on a bus pin while `addr` was accessed repeatedly.
struct ProbeObservation {
  PhysAddr addr = 0;
  std::string pin;
  unsigned value = 0;
};

/// Physical-probe solving works over the same bits timing analysis searches.
BitMask probe_universe();

/// Pins a config exposes: every labeled function, plus one chip select per
/// DIMM slot ("CS0", "CS1", ...). The slot index packs the CPU, Channel and
/// DIMM function values, earliest function in the config as the low bit.
std::vector<std::string> probe_pins(const DramConfig &config);

/// Slot of the DIMM `addr` maps to.
unsigned dimm_slot(const DramConfig &config, PhysAddr addr);
unsigned dimm_slot_count(const DramConfig &config);

/// Logic level of `pin` while `addr` is accessed. Throws UnknownPin.
unsigned simulate_probe(const DramConfig &config, PhysAddr addr, std::string_view pin);

/// Observations for `pin` at `count` random cache-line addresses in [0, 2^30).
std::vector<ProbeObservation> generate_observations(const DramConfig &config, std::string_view pin, std::size_t count,
                                                    std::uint64_t seed);

using AddressFilter = std::function<bool(PhysAddr)>;

/// Solves the GF(2) system formed by the observations (all must belong to one
/// pin) after applying `filter`. The label is taken from the pin name when it
/// names a function. Throws Inconsistent / Underdetermined.
AddressFunction solve_pin_function(const std::vector<ProbeObservation> &obs, const AddressFilter &filter = {});

/// OR of the chip-select levels of the DIMMs behind one channel or CPU.
unsigned combine_chip_selects(const std::map<unsigned, unsigned> &cs_values);

/// Labels of the CPU / Channel / DIMM functions in slot-bit order (bit 0 first).
std::vector<FunctionLabel> slot_selectors(const DramConfig &config);

/// Recovers a whole mapping top-down. CPU, Channel and DIMM functions come from
/// ORing the chip selects of the slots whose selector bit is 1 (half the
/// DIMMs); the remaining pins (Rank, bank pins) are then solved only on
/// addresses that reach the probed DIMM's CPU and channel. `selectors` is the
/// board topology in slot-bit order; `pins` the directly probed function pins.
std::vector<AddressFunction> solve_all_pins(const std::vector<ProbeObservation> &obs,
                                            const std::vector<FunctionLabel> &selectors,
                                            const std::vector<std::string> &pins);

/// Every pin of `config` observed at the same `count` random addresses.
std::vector<ProbeObservation> generate_all_observations(const DramConfig &config, std::size_t count,
                                                        std::uint64_t seed);

/// JSON lines: {"addr": "0x...", "pin": "BA0", "value": 0}
void write_observations(std::ostream &os, const std::vector<ProbeObservation> &obs);
/// Throws Parse with the offending line number.
std::vector<ProbeObservation> read_observations(std::istream &is);

}  // namespace drama
