#include <algorithm>
#include <charconv>
#include <cstdio>

#include "drama/dram_config.hpp"
#include "drama/error.hpp"

namespace drama {

namespace {

constexpr FunctionLabel kAllLabels[] = {
    FunctionLabel::CPU, FunctionLabel::Channel, FunctionLabel::DIMM,
    FunctionLabel::Rank, FunctionLabel::BG0, FunctionLabel::BG1,
    FunctionLabel::BA0, FunctionLabel::BA1, FunctionLabel::BA2,
};

std::uint64_t gather(PhysAddr addr, const std::vector<unsigned> &bits) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out |= ((addr >> bits[i]) & 1u) << i;
  }
  return out;
}

std::vector<unsigned> bit_list(const nlohmann::json &doc, const char *what) {
  if (!doc.is_array()) throw Error(ErrorKind::Parse, std::string(what) + " must be an array of bit indices");
  std::vector<unsigned> out;
  for (const auto &v : doc) {
    if (!v.is_number_unsigned()) throw Error(ErrorKind::Parse, std::string(what) + " holds a non-index value");
    out.push_back(v.get<unsigned>());
  }
  return out;
}

}  // namespace

std::string_view to_string(FunctionLabel label) {
  switch (label) {
    case FunctionLabel::CPU: return "CPU";
    case FunctionLabel::Channel: return "Channel";
    case FunctionLabel::DIMM: return "DIMM";
    case FunctionLabel::Rank: return "Rank";
    case FunctionLabel::BG0: return "BG0";
    case FunctionLabel::BG1: return "BG1";
    case FunctionLabel::BA0: return "BA0";
    case FunctionLabel::BA1: return "BA1";
    case FunctionLabel::BA2: return "BA2";
  }
  return "?";
}

FunctionLabel parse_label(std::string_view text) {
  for (FunctionLabel l : kAllLabels) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorKind::UnknownPin, "unknown function label '" + std::string(text) + "'");
}

void DramConfig::validate() const {
  auto fail = [this](const std::string &why) {
    throw Error(ErrorKind::InvalidConfig, "config '" + name + "': " + why);
  };
  if (bus_width_bits != 64 && bus_width_bits != 32) fail("bus_width_bits must be 64 or 32");
  if (functions.size() > 20) fail("more than 20 addressing functions");
  if (row_bits.empty()) fail("row_bits is empty");
  std::uint64_t seen = 0;
  for (unsigned b : row_bits) {
    if (b >= kAddressBits) fail("row bit " + std::to_string(b) + " out of range");
    if (seen & (std::uint64_t{1} << b)) fail("bit " + std::to_string(b) + " listed twice");
    seen |= std::uint64_t{1} << b;
  }
  for (unsigned b : column_bits) {
    if (b >= kAddressBits) fail("column bit " + std::to_string(b) + " out of range");
    if (seen & (std::uint64_t{1} << b)) fail("bit " + std::to_string(b) + " listed twice");
    seen |= std::uint64_t{1} << b;
  }
  std::vector<FunctionLabel> labels;
  for (const auto &f : functions) {
    if (f.mask.empty()) fail("addressing function with no bits");
    if (f.label) {
      if (std::find(labels.begin(), labels.end(), *f.label) != labels.end()) {
        fail("duplicate label " + std::string(to_string(*f.label)));
      }
      labels.push_back(*f.label);
    }
  }
  if (gf2_rank(masks()) != functions.size()) fail("addressing functions are linearly dependent");
}

std::vector<BitMask> DramConfig::masks() const {
  std::vector<BitMask> out;
  out.reserve(functions.size());
  for (const auto &f : functions) out.push_back(f.mask);
  return out;
}

std::optional<std::size_t> DramConfig::find(FunctionLabel label) const {
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].label == label) return i;
  }
  return std::nullopt;
}

unsigned DramConfig::count_label(FunctionLabel label) const {
  return static_cast<unsigned>(std::count_if(functions.begin(), functions.end(),
                                             [label](const AddressFunction &f) { return f.label == label; }));
}

BitMask DramConfig::used_bits() const {
  BitMask out;
  for (const auto &f : functions) out = out | f.mask;
  std::vector<unsigned> rc = row_bits;
  rc.insert(rc.end(), column_bits.begin(), column_bits.end());
  return out | BitMask::from_bits(rc);
}

BankCoordinate DramConfig::bank_of(PhysAddr addr) const {
  BankCoordinate c;
  c.width = bank_bits();
  for (unsigned i = 0; i < functions.size(); ++i) {
    c.bits |= eval_mask(functions[i].mask, addr) << i;
  }
  return c;
}

std::uint64_t DramConfig::row_of(PhysAddr addr) const { return gather(addr, row_bits); }
std::uint64_t DramConfig::column_of(PhysAddr addr) const { return gather(addr, column_bits); }

Location decode(const DramConfig &config, PhysAddr addr) {
  if (addr >= kAddressLimit) {
    throw Error(ErrorKind::InvalidConfig, "address " + format_address(addr) + " exceeds 40 bits");
  }
  return Location{config.bank_of(addr), config.row_of(addr), config.column_of(addr)};
}

bool same_bank(const DramConfig &config, PhysAddr a, PhysAddr b) {
  return config.bank_of(a) == config.bank_of(b);
}

nlohmann::json mask_to_json(BitMask mask) { return mask.bits(); }

BitMask mask_from_json(const nlohmann::json &doc) {
  std::vector<unsigned> bits = bit_list(doc, "mask");
  return BitMask::from_bits(bits);
}

nlohmann::json to_json(const DramConfig &config) {
  nlohmann::json funcs = nlohmann::json::array();
  for (const auto &f : config.functions) {
    nlohmann::json jf;
    jf["label"] = f.label ? nlohmann::json(std::string(to_string(*f.label))) : nlohmann::json(nullptr);
    jf["bits"] = mask_to_json(f.mask);
    funcs.push_back(std::move(jf));
  }
  nlohmann::json doc;
  doc["name"] = config.name;
  doc["bus_width_bits"] = config.bus_width_bits;
  doc["functions"] = std::move(funcs);
  doc["row_bits"] = config.row_bits;
  doc["column_bits"] = config.column_bits;
  if (!config.notes.empty()) doc["notes"] = config.notes;
  return doc;
}

DramConfig config_from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "config must be a JSON object");
  DramConfig c;
  try {
    c.name = doc.value("name", std::string("custom"));
    c.bus_width_bits = doc.value("bus_width_bits", 64u);
    c.notes = doc.value("notes", std::string());
    if (!doc.contains("functions")) throw Error(ErrorKind::Parse, "config lacks 'functions'");
    for (const auto &jf : doc.at("functions")) {
      AddressFunction f;
      f.mask = mask_from_json(jf.at("bits"));
      if (jf.contains("label") && !jf.at("label").is_null()) {
        f.label = parse_label(jf.at("label").get<std::string>());
      }
      c.functions.push_back(f);
    }
    c.row_bits = bit_list(doc.at("row_bits"), "row_bits");
    c.column_bits = bit_list(doc.value("column_bits", nlohmann::json::array()), "column_bits");
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Parse, std::string("malformed config: ") + e.what());
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::UnknownPin) throw Error(ErrorKind::Parse, e.what());
    throw;
  }
  c.validate();
  return c;
}

PhysAddr parse_address(std::string_view text) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  PhysAddr value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::Parse, "malformed address '" + std::string(text) + "'");
  }
  if (value >= kAddressLimit) throw Error(ErrorKind::Parse, "address exceeds 40 bits");
  return value;
}

std::string format_address(PhysAddr addr) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(addr));
  return buf;
}

}  // namespace drama
