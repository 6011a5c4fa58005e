#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cli.hpp"
#include "drama/dram_state.hpp"
#include "drama/timing_reveng.hpp"

namespace drama::cli {

struct TimingOpts {
  double noise = 8.0;
  std::optional<Cycles> refresh;

  TimingModel model() const;
  void record(nlohmann::json &params) const;
};

struct PresetShowOpts {
  std::string name;
};

struct SimulateOpts {
  Source src;
  TimingOpts timing;
  std::vector<std::string> addrs;
  bool cached = false;
};

struct HistogramOpts {
  Source src;
  TimingOpts timing;
  std::string pattern = "three-class";
  std::string a;
  std::string b;
  std::size_t samples = 4096;
  double bin = 4;
};

struct RevengTimingOpts {
  Source src;
  TimingOpts timing;
  std::string mode = "full";
  std::string region = "0x0:0x40000000";
  std::size_t pool = kDefaultPoolSize;
  std::size_t probes = kDefaultProbeCount;
  unsigned reps = kDefaultReps;
  unsigned max_weight = kDefaultMaxWeight;
  std::size_t verify_trials = 256;
  bool check = false;
  std::string histogram_path;
  double bin = 4;
};

struct RevengProbeOpts {
  Source src;
  std::size_t samples = 64;
  std::string observations;
  std::string observations_out;
  bool check = false;
};

struct CovertOpts {
  Source src;
  TimingOpts timing;
  unsigned tuples = 8;
  Cycles period = 1 << 16;
  std::string sync = "wall";
  std::string payload;
  std::size_t bits = 1024;
  unsigned probes = 32;
  double noise_rate = 0;
  Cycles offset = 0;
  std::vector<Cycles> periods;
};

struct SideChannelOpts {
  Source src;
  TimingOpts timing;
  std::string victim;
  std::uint64_t trials = 32;
  std::size_t candidates = 256;
  Cycles wait = 2000;
  std::uint64_t min_hits = 20;
  // monitor only
  std::string p;
  std::string p_bar;
  Cycles duration = 0;
  Cycles interval = 5000;
};

struct RowhammerOpts {
  Source src;
  std::string region = "0x0:0x400000";
  std::optional<std::uint64_t> row;
};

struct BankProbOpts {
  Source src;
  std::optional<std::uint64_t> trials;
};

int cmd_preset_list(const Globals &g, std::ostream &out);
int cmd_preset_show(const Globals &g, const PresetShowOpts &o, std::ostream &out);
int cmd_simulate_access(const Globals &g, const SimulateOpts &o, std::ostream &out);
int cmd_histogram(const Globals &g, const HistogramOpts &o, std::ostream &out);
int cmd_reveng_timing(const Globals &g, const RevengTimingOpts &o, std::ostream &out);
int cmd_reveng_probe(const Globals &g, const RevengProbeOpts &o, std::ostream &out);
int cmd_covert_run(const Globals &g, const CovertOpts &o, std::ostream &out);
int cmd_covert_sweep(const Globals &g, const CovertOpts &o, std::ostream &out);
int cmd_sidechannel_template(const Globals &g, const SideChannelOpts &o, std::ostream &out);
int cmd_sidechannel_monitor(const Globals &g, const SideChannelOpts &o, std::ostream &out);
int cmd_rowhammer_pairs(const Globals &g, const RowhammerOpts &o, std::ostream &out);
int cmd_analyze_bank_prob(const Globals &g, const BankProbOpts &o, std::ostream &out);

}  // namespace drama::cli
