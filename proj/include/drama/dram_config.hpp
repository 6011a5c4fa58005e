#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drama/bitmask.hpp"

namespace drama {

enum class FunctionLabel { CPU, Channel, DIMM, Rank, BG0, BG1, BA0, BA1, BA2 };

std::string_view to_string(FunctionLabel label);
/// Throws UnknownPin for anything outside the label set.
FunctionLabel parse_label(std::string_view text);

struct AddressFunction {
  BitMask mask;
  std::optional<FunctionLabel> label;

  bool operator==(const AddressFunction &) const = default;
};

/// Bank-address vector: bit i is the value of functions[i].
struct BankCoordinate {
  std::uint32_t bits = 0;
  unsigned width = 0;

  bool bit(unsigned i) const { return (bits >> i) & 1u; }
  auto operator<=>(const BankCoordinate &) const = default;
};

struct Location {
  BankCoordinate bank;
  std::uint64_t row = 0;
  std::uint64_t column = 0;
};

/// Geometry plus the ordered addressing functions of one memory setup.
/// Immutable after `validate()`.
class DramConfig {
 public:
  std::string name;
  unsigned bus_width_bits = 64;
  std::vector<AddressFunction> functions;
  std::vector<unsigned> row_bits;
  std::vector<unsigned> column_bits;
  std::string notes;

  /// Throws InvalidConfig.
  void validate() const;

  /// B, the number of bank-addressing bits.
  unsigned bank_bits() const { return static_cast<unsigned>(functions.size()); }
  std::uint64_t bank_count() const { return std::uint64_t{1} << bank_bits(); }
  std::uint64_t row_size_bytes() const {
    return (std::uint64_t{1} << column_bits.size()) * (bus_width_bits / 8);
  }
  std::vector<BitMask> masks() const;
  /// Index of the function carrying `label`, if any.
  std::optional<std::size_t> find(FunctionLabel label) const;
  unsigned count_label(FunctionLabel label) const;
  /// Union of every bit referenced by functions, rows and columns.
  BitMask used_bits() const;

  BankCoordinate bank_of(PhysAddr addr) const;
  std::uint64_t row_of(PhysAddr addr) const;
  std::uint64_t column_of(PhysAddr addr) const;
};

/// Throws InvalidConfig for addresses >= 2^40.
Location decode(const DramConfig &config, PhysAddr addr);
bool same_bank(const DramConfig &config, PhysAddr a, PhysAddr b);

nlohmann::json to_json(const DramConfig &config);
/// Throws Parse / InvalidConfig.
DramConfig config_from_json(const nlohmann::json &doc);

nlohmann::json mask_to_json(BitMask mask);
BitMask mask_from_json(const nlohmann::json &doc);

// Embedded mappings.
std::vector<std::string> preset_names();
/// Throws UnknownPreset.
DramConfig load_preset(std::string_view name);
/// Raw embedded JSON text of a preset.
std::string_view preset_json(std::string_view name);

/// "0x1f40" and plain decimal both accepted; throws Parse.
PhysAddr parse_address(std::string_view text);
std::string format_address(PhysAddr addr);

}  // namespace drama
