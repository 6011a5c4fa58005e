#include <algorithm>
#include <functional>

#include <CLI11.hpp>

#include "cli.hpp"
#include "commands.hpp"
#include "drama/error.hpp"

namespace drama::cli {

namespace {

void add_source(CLI::App *sub, Source &src) {
  sub->add_option("--preset", src.preset, "Embedded mapping (see `preset list`)");
  sub->add_option("--config", src.config_path, "Mapping JSON file (format of `preset show`)");
}

void add_timing(CLI::App *sub, TimingOpts &t, std::uint64_t &refresh) {
  sub->add_option("--noise", t.noise, "Latency jitter sigma in cycles")->capture_default_str();
  sub->add_option("--refresh", refresh, "Close all rows every N cycles");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownPreset:
    case ErrorKind::Parse:
    case ErrorKind::InvalidConfig:
      return kUsageError;
    default:
      return kAnalysisFailure;
  }
}

}  // namespace

int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
  CLI::App app{"DRAM addressing lab: simulate, reverse engineer and attack DRAM bank mappings", "drama-lab"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Root seed for every random stream")->envname("DRAMA_LAB_SEED")->capture_default_str();
  app.add_option("--output,-o", g.output, "Write the result to this file instead of stdout");

  std::function<int()> action;
  std::uint64_t refresh = 0;
  auto timing_from = [&](TimingOpts &t, CLI::App *sub) {
    if (sub->get_option("--refresh")->count()) t.refresh = refresh;
  };

  // preset
  auto *preset = app.add_subcommand("preset", "Embedded mappings");
  preset->require_subcommand(1);
  preset->add_subcommand("list", "One line per preset")->callback([&] { action = [&] { return cmd_preset_list(g, out); }; });
  PresetShowOpts show;
  auto *show_cmd = preset->add_subcommand("show", "Print a preset as config JSON");
  show_cmd->add_option("name", show.name)->required();
  show_cmd->callback([&] { action = [&] { return cmd_preset_show(g, show, out); }; });

  // simulate
  auto *simulate = app.add_subcommand("simulate", "Drive the DRAM model directly");
  simulate->require_subcommand(1);
  SimulateOpts sim;
  auto *access = simulate->add_subcommand("access", "Issue accesses and report decode and latency");
  add_source(access, sim.src);
  add_timing(access, sim.timing, refresh);
  access->add_option("--addr", sim.addrs, "Addresses in order (repeat or comma separate)")->delimiter(',');
  access->add_flag("--cached", sim.cached, "Serve from cache instead of DRAM");
  access->callback([&] {
    timing_from(sim.timing, access);
    action = [&] { return cmd_simulate_access(g, sim, out); };
  });

  // histogram
  HistogramOpts hist;
  auto *histo = app.add_subcommand("histogram", "Latency histogram CSV");
  add_source(histo, hist.src);
  add_timing(histo, hist.timing, refresh);
  histo->add_option("--pattern", hist.pattern, "three-class | pair")->capture_default_str();
  histo->add_option("--a", hist.a, "First address of a fixed pair");
  histo->add_option("--b", hist.b, "Second address of a fixed pair");
  histo->add_option("--samples", hist.samples)->capture_default_str();
  histo->add_option("--bin", hist.bin, "Bin width in cycles")->capture_default_str();
  histo->callback([&] {
    timing_from(hist.timing, histo);
    action = [&] { return cmd_histogram(g, hist, out); };
  });

  // reveng
  auto *reveng = app.add_subcommand("reveng", "Recover addressing functions");
  reveng->require_subcommand(1);
  RevengTimingOpts rt;
  auto *timing = reveng->add_subcommand("timing", "From row-conflict timing");
  add_source(timing, rt.src);
  add_timing(timing, rt.timing, refresh);
  timing->add_option("--mode", rt.mode, "full | 1g | 2m | 4k")->capture_default_str();
  timing->add_option("--region", rt.region, "Pool region start:end")->capture_default_str();
  timing->add_option("--pool", rt.pool)->capture_default_str();
  timing->add_option("--probes", rt.probes)->capture_default_str();
  timing->add_option("--reps", rt.reps)->capture_default_str();
  timing->add_option("--max-weight", rt.max_weight)->capture_default_str();
  timing->add_option("--verify-trials", rt.verify_trials)->capture_default_str();
  timing->add_flag("--check", rt.check, "Compare against the config; exit 1 on mismatch");
  timing->add_option("--histogram", rt.histogram_path, "Also write the pair-latency histogram CSV here");
  timing->add_option("--bin", rt.bin, "Histogram bin width")->capture_default_str();
  timing->callback([&] {
    timing_from(rt.timing, timing);
    action = [&] { return cmd_reveng_timing(g, rt, out); };
  });

  RevengProbeOpts rp;
  auto *probe_cmd = reveng->add_subcommand("probe", "From bus-probe observations");
  add_source(probe_cmd, rp.src);
  probe_cmd->add_option("--samples", rp.samples, "Random addresses to observe")->capture_default_str();
  probe_cmd->add_option("--observations", rp.observations, "Read observations (JSON lines) instead of simulating");
  probe_cmd->add_option("--observations-out", rp.observations_out, "Save the observations used");
  probe_cmd->add_flag("--check", rp.check, "Compare against the config; exit 1 on mismatch");
  probe_cmd->callback([&] { action = [&] { return cmd_reveng_probe(g, rp, out); }; });

  // covert
  auto *covert = app.add_subcommand("covert", "Row-buffer covert channel");
  covert->require_subcommand(1);
  CovertOpts co;
  auto add_covert = [&](CLI::App *sub) {
    add_source(sub, co.src);
    add_timing(sub, co.timing, refresh);
    sub->add_option("--tuples", co.tuples, "Parallel bank sub-channels")->capture_default_str();
    sub->add_option("--sync", co.sync, "wall | clock")->capture_default_str();
    sub->add_option("--bits", co.bits, "Random payload length when --payload is absent")->capture_default_str();
    sub->add_option("--probes-per-block", co.probes, "Receiver probes per block")->capture_default_str();
    sub->add_option("--noise-rate", co.noise_rate, "Background accesses per cycle")->capture_default_str();
    sub->add_option("--offset", co.offset, "Receiver start offset in cycles (clock sync)")->capture_default_str();
  };
  auto *covert_run = covert->add_subcommand("run", "One transmission");
  add_covert(covert_run);
  covert_run->add_option("--period", co.period, "Block period in cycles")->capture_default_str();
  covert_run->add_option("--payload", co.payload, "Payload as hex");
  covert_run->callback([&] {
    timing_from(co.timing, covert_run);
    action = [&] { return cmd_covert_run(g, co, out); };
  });
  auto *covert_sweep = covert->add_subcommand("sweep", "Error and capacity over block periods (CSV)");
  add_covert(covert_sweep);
  covert_sweep->add_option("--periods", co.periods, "Comma-separated block periods")->delimiter(',')->required();
  covert_sweep->callback([&] {
    timing_from(co.timing, covert_sweep);
    action = [&] { return cmd_covert_sweep(g, co, out); };
  });

  // sidechannel
  auto *side = app.add_subcommand("sidechannel", "Row-hit template attack");
  side->require_subcommand(1);
  SideChannelOpts so;
  auto add_side = [&](CLI::App *sub) {
    add_source(sub, so.src);
    add_timing(sub, so.timing, refresh);
    sub->add_option("--victim", so.victim, "Victim JSON")->required();
    sub->add_option("--trials", so.trials, "Profiling trials per candidate and condition")->capture_default_str();
    sub->add_option("--candidates", so.candidates, "Uniformly drawn candidate lines")->capture_default_str();
    sub->add_option("--wait", so.wait, "Cycles between closing the row and measuring")->capture_default_str();
    sub->add_option("--min-hits", so.min_hits)->capture_default_str();
  };
  auto *tmpl = side->add_subcommand("template", "Profile candidates and select templates");
  add_side(tmpl);
  tmpl->callback([&] {
    timing_from(so.timing, tmpl);
    action = [&] { return cmd_sidechannel_template(g, so, out); };
  });
  auto *mon = side->add_subcommand("monitor", "Probe one address over time (CSV)");
  add_side(mon);
  mon->add_option("--p", so.p, "Target address (default: best template)");
  mon->add_option("--p-bar", so.p_bar, "Conflict address (default: searched)");
  mon->add_option("--duration", so.duration, "Cycles to monitor (default: covers the schedule)");
  mon->add_option("--interval", so.interval, "Cycles between probes")->capture_default_str();
  mon->callback([&] {
    timing_from(so.timing, mon);
    action = [&] { return cmd_sidechannel_monitor(g, so, out); };
  });

  // rowhammer
  auto *rowhammer = app.add_subcommand("rowhammer", "Rowhammer targeting");
  rowhammer->require_subcommand(1);
  RowhammerOpts rh;
  std::uint64_t row = 0;
  auto *pairs = rowhammer->add_subcommand("pairs", "Double-sided aggressor pairs in a region");
  add_source(pairs, rh.src);
  pairs->add_option("--region", rh.region, "start:end")->capture_default_str();
  auto *row_opt = pairs->add_option("--row", row, "Only this victim row");
  pairs->callback([&] {
    if (row_opt->count()) rh.row = row;
    action = [&] { return cmd_rowhammer_pairs(g, rh, out); };
  });

  // analyze
  auto *analyze = app.add_subcommand("analyze", "Mapping analysis");
  analyze->require_subcommand(1);
  BankProbOpts bp;
  std::uint64_t trials = 0;
  auto *bank_prob = analyze->add_subcommand("bank-prob", "Probability that two random addresses share a bank");
  add_source(bank_prob, bp.src);
  auto *trials_opt = bank_prob->add_option("--trials", trials, "Monte Carlo pairs");
  bank_prob->callback([&] {
    if (trials_opt->count()) bp.trials = trials;
    action = [&] { return cmd_analyze_bank_prob(g, bp, out); };
  });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << error_json("Usage", e.what()).dump() << '\n';
    return kUsageError;
  }

  try {
    return action ? action() : kUsageError;
  } catch (const UsageError &e) {
    err << error_json("Usage", e.what()).dump() << '\n';
    return kUsageError;
  } catch (const Error &e) {
    err << error_json(std::string(to_string(e.kind())), e.what()).dump() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception &e) {
    err << error_json("Internal", e.what()).dump() << '\n';
    return kAnalysisFailure;
  }
}

}  // namespace drama::cli
