#include <array>
#include <utility>

#include "drama/dram_config.hpp"
#include "drama/error.hpp"

namespace drama {

namespace {

// Same document format as user-supplied configs.
constexpr std::array<std::pair<std::string_view, std::string_view>, 15> kPresets = {{
    {"sandybridge_ddr3_1ch", R"json({
  "name": "sandybridge_ddr3_1ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [13, 17]},
    {"label": "BA1", "bits": [14, 18]},
    {"label": "BA2", "bits": [15, 19]},
    {"label": "Rank", "bits": [16]}
  ],
  "row_bits": [17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
  "notes": "Addressing functions: DDR3 mapping table, Sandy Bridge, 1 channel, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"sandybridge_ddr3_2ch", R"json({
  "name": "sandybridge_ddr3_2ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [14, 18]},
    {"label": "BA1", "bits": [15, 19]},
    {"label": "BA2", "bits": [16, 20]},
    {"label": "Rank", "bits": [17]},
    {"label": "Channel", "bits": [6]}
  ],
  "row_bits": [18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 7, 8, 9, 10, 11, 12, 13],
  "notes": "Addressing functions: DDR3 mapping table, Sandy Bridge, 2 channels, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"ivyhaswell_ddr3_1ch", R"json({
  "name": "ivyhaswell_ddr3_1ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [13, 17]},
    {"label": "BA1", "bits": [14, 18]},
    {"label": "BA2", "bits": [16, 20]},
    {"label": "Rank", "bits": [15, 19]}
  ],
  "row_bits": [17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
  "notes": "Addressing functions: DDR3 mapping table, Ivy Bridge/Haswell, 1 channel, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"ivyhaswell_ddr3_1ch2d", R"json({
  "name": "ivyhaswell_ddr3_1ch2d",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [13, 18]},
    {"label": "BA1", "bits": [14, 19]},
    {"label": "BA2", "bits": [17, 21]},
    {"label": "Rank", "bits": [16, 20]},
    {"label": "DIMM", "bits": [15]}
  ],
  "row_bits": [18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
  "notes": "Addressing functions: DDR3 mapping table, Ivy Bridge/Haswell, 1 channel, 2 DIMMs/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"ivyhaswell_ddr3_2ch", R"json({
  "name": "ivyhaswell_ddr3_2ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [14, 18]},
    {"label": "BA1", "bits": [15, 19]},
    {"label": "BA2", "bits": [17, 21]},
    {"label": "Rank", "bits": [16, 20]},
    {"label": "Channel", "bits": [7, 8, 9, 12, 13, 18, 19]}
  ],
  "row_bits": [18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 8, 9, 10, 11, 12, 13],
  "notes": "Addressing functions: DDR3 mapping table, Ivy Bridge/Haswell, 2 channels, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"ivyhaswell_ddr3_2ch2d", R"json({
  "name": "ivyhaswell_ddr3_2ch2d",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BA0", "bits": [14, 19]},
    {"label": "BA1", "bits": [15, 20]},
    {"label": "BA2", "bits": [18, 22]},
    {"label": "Rank", "bits": [17, 21]},
    {"label": "DIMM", "bits": [16]},
    {"label": "Channel", "bits": [7, 8, 9, 12, 13, 18, 19]}
  ],
  "row_bits": [19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 8, 9, 10, 11, 12, 13],
  "notes": "Addressing functions: DDR3 mapping table, Ivy Bridge/Haswell, 2 channels, 2 DIMMs/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"skylake_ddr4_2ch", R"json({
  "name": "skylake_ddr4_2ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BG0", "bits": [7, 14]},
    {"label": "BG1", "bits": [15, 19]},
    {"label": "BA0", "bits": [17, 21]},
    {"label": "BA1", "bits": [18, 22]},
    {"label": "Rank", "bits": [16, 20]},
    {"label": "Channel", "bits": [8, 9, 12, 13, 18, 19]}
  ],
  "row_bits": [19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 6, 9, 10, 11, 12, 13, 14],
  "notes": "Addressing functions: DDR4 mapping table, Skylake, 2 channels, 1 DIMM/channel (software analysis only). Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"haswell_ep_interleaved_1ch", R"json({
  "name": "haswell_ep_interleaved_1ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BG0", "bits": [6, 22]},
    {"label": "BG1", "bits": [19, 23]},
    {"label": "BA0", "bits": [20, 24]},
    {"label": "BA1", "bits": [21, 25]},
    {"label": "Rank", "bits": [14]},
    {"label": "CPU", "bits": [7, 17]}
  ],
  "row_bits": [16, 17, 18, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 8, 9, 10, 11, 12, 13, 15],
  "notes": "Addressing functions: DDR4 mapping table, dual Haswell-EP, interleaved, 1 channel, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"haswell_ep_interleaved_2ch", R"json({
  "name": "haswell_ep_interleaved_2ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BG0", "bits": [6, 23]},
    {"label": "BG1", "bits": [20, 24]},
    {"label": "BA0", "bits": [21, 25]},
    {"label": "BA1", "bits": [22, 26]},
    {"label": "Rank", "bits": [15]},
    {"label": "CPU", "bits": [7, 17]},
    {"label": "Channel", "bits": [8, 12, 14, 16, 18, 20, 22, 24, 26]}
  ],
  "row_bits": [17, 18, 19, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 9, 10, 11, 12, 13, 14, 16],
  "notes": "Addressing functions: DDR4 mapping table, dual Haswell-EP, interleaved, 2 channels, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"haswell_ep_noninterleaved_1ch", R"json({
  "name": "haswell_ep_noninterleaved_1ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BG0", "bits": [6, 21]},
    {"label": "BG1", "bits": [18, 22]},
    {"label": "BA0", "bits": [19, 23]},
    {"label": "BA1", "bits": [20, 24]},
    {"label": "Rank", "bits": [13]}
  ],
  "row_bits": [15, 16, 17, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 7, 8, 9, 10, 11, 12, 14],
  "notes": "Addressing functions: DDR4 mapping table, dual Haswell-EP, non-interleaved, 1 channel, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"haswell_ep_noninterleaved_2ch", R"json({
  "name": "haswell_ep_noninterleaved_2ch",
  "bus_width_bits": 64,
  "functions": [
    {"label": "BG0", "bits": [6, 22]},
    {"label": "BG1", "bits": [19, 23]},
    {"label": "BA0", "bits": [20, 24]},
    {"label": "BA1", "bits": [21, 25]},
    {"label": "Rank", "bits": [14]},
    {"label": "Channel", "bits": [7, 12, 14, 16, 18, 20, 22, 24, 26]}
  ],
  "row_bits": [16, 17, 18, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33],
  "column_bits": [3, 4, 5, 8, 9, 10, 11, 12, 13, 15],
  "notes": "Addressing functions: DDR4 mapping table, dual Haswell-EP, non-interleaved, 2 channels, 1 DIMM/channel. Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"snapdragon_s4", R"json({
  "name": "snapdragon_s4",
  "bus_width_bits": 32,
  "functions": [
    {"label": "BA0", "bits": [13]},
    {"label": "BA1", "bits": [14]},
    {"label": "BA2", "bits": [15]},
    {"label": "Rank", "bits": [10]}
  ],
  "row_bits": [16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31],
  "column_bits": [2, 3, 4, 5, 6, 7, 8, 9, 11, 12],
  "notes": "Addressing functions: LPDDR2/3/4 mapping table, Qualcomm Snapdragon S4 Pro (software analysis only). Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"exynos5", R"json({
  "name": "exynos5",
  "bus_width_bits": 32,
  "functions": [
    {"label": "BA0", "bits": [13]},
    {"label": "BA1", "bits": [14]},
    {"label": "BA2", "bits": [15]},
    {"label": "Rank", "bits": [7]}
  ],
  "row_bits": [16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31],
  "column_bits": [2, 3, 4, 5, 6, 8, 9, 10, 11, 12],
  "notes": "Addressing functions: LPDDR2/3/4 mapping table, Samsung Exynos 5 Dual (software analysis only). Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"snapdragon_800", R"json({
  "name": "snapdragon_800",
  "bus_width_bits": 32,
  "functions": [
    {"label": "BA0", "bits": [13]},
    {"label": "BA1", "bits": [14]},
    {"label": "BA2", "bits": [15]},
    {"label": "Rank", "bits": [10]}
  ],
  "row_bits": [16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31],
  "column_bits": [2, 3, 4, 5, 6, 7, 8, 9, 11, 12],
  "notes": "Addressing functions: LPDDR2/3/4 mapping table, Qualcomm Snapdragon 800/820 (software analysis only). Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
    {"exynos7420", R"json({
  "name": "exynos7420",
  "bus_width_bits": 32,
  "functions": [
    {"label": "BA0", "bits": [14]},
    {"label": "BA1", "bits": [15]},
    {"label": "BA2", "bits": [16]},
    {"label": "Rank", "bits": [8, 13]},
    {"label": "Channel", "bits": [7, 12]}
  ],
  "row_bits": [17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31],
  "column_bits": [2, 3, 4, 5, 6, 9, 10, 11, 12, 13],
  "notes": "Addressing functions: LPDDR2/3/4 mapping table, Samsung Exynos 7420 (software analysis only). Row and column bit lists are reconstructed from the byte/column/channel/bank/row ordering and are not part of the published mapping."
})json"},
}};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto &[name, text] : kPresets) out.emplace_back(name);
  return out;
}

std::string_view preset_json(std::string_view name) {
  for (const auto &[n, text] : kPresets) {
    if (n == name) return text;
  }
  throw Error(ErrorKind::UnknownPreset, "unknown preset '" + std::string(name) + "'");
}

DramConfig load_preset(std::string_view name) {
  return config_from_json(nlohmann::json::parse(preset_json(name)));
}

}  // namespace drama
