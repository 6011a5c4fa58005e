#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using drama::cli::run;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome lab(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "drama_lab_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<std::pair<double, long>> csv_rows(const std::string &text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<double, long>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || !std::isdigit(static_cast<unsigned char>(line[0]))) continue;
    const auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stol(line.substr(comma + 1)));
  }
  return rows;
}

// Occupied-bin clusters separated by at least `gap` cycles of empty bins.
int count_modes(const std::vector<std::pair<double, long>> &rows, double gap) {
  int modes = 0;
  double last = -1e9;
  for (const auto &[edge, count] : rows) {
    if (count == 0) continue;
    if (edge - last > gap) ++modes;
    last = edge;
  }
  return modes;
}

}  // namespace

TEST_CASE("preset list") {
  const auto r = lab({"preset", "list"});
  CHECK(r.code == 0);
  CHECK(r.out.find("skylake_ddr4_2ch, B=6, 64 banks") != std::string::npos);
  CHECK(r.out.find("sandybridge_ddr3_1ch, B=4, 16 banks") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 12);
}

TEST_CASE("unknown preset is a usage error with machine-readable JSON") {
  const auto r = lab({"reveng", "timing", "--preset", "nope"});
  CHECK(r.code == 2);
  const auto j = json::parse(r.err);
  CHECK(j["error"] == "UnknownPreset");
  CHECK(lab({"reveng"}).code == 2);
  CHECK(lab({"covert", "run", "--preset", "skylake_ddr4_2ch", "--tuples", "notanumber"}).code == 2);
}

TEST_CASE("timing reverse engineering with --check") {
  const auto r = lab({"reveng", "timing", "--preset", "ivyhaswell_ddr3_2ch", "--mode", "full", "--check"});
  CHECK(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["result"]["check"]["spans_equal"] == true);
  CHECK(j["manifest"]["subcommand"] == "reveng timing");
  CHECK(j["manifest"]["seed"] == 0);

  const auto partial = lab({"reveng", "timing", "--preset", "haswell_ep_interleaved_2ch", "--mode", "2m", "--check"});
  CHECK(partial.code == 0);
  const auto pj = json::parse(partial.out);
  CHECK(pj["result"]["check"]["restricted"] == true);
  CHECK(pj["result"]["functions"].size() < 7);
}

TEST_CASE("identical invocations give byte-identical JSON") {
  const std::vector<std::string> args{"--seed", "17", "reveng", "timing", "--preset", "exynos5", "--pool", "1024"};
  const auto a = lab(args);
  const auto b = lab(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  auto other = args;
  other[1] = "18";
  CHECK(lab(other).out != a.out);
}

TEST_CASE("seed falls back to DRAMA_LAB_SEED") {
  ::setenv("DRAMA_LAB_SEED", "99", 1);
  const auto r = lab({"analyze", "bank-prob", "--preset", "exynos5"});
  ::unsetenv("DRAMA_LAB_SEED");
  CHECK(json::parse(r.out)["manifest"]["seed"] == 99);
  CHECK(json::parse(lab({"analyze", "bank-prob", "--preset", "exynos5"}).out)["manifest"]["seed"] == 0);
}

TEST_CASE("--output writes the file instead of stdout") {
  const auto path = scratch("bank_prob.json");
  std::filesystem::remove(path);
  const auto r = lab({"--output", path.string(), "analyze", "bank-prob", "--preset", "skylake_ddr4_2ch", "--trials",
                      "100000"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  const auto j = json::parse(in);
  CHECK(j["result"]["exact"] == 1.0 / 64);
  CHECK(j["manifest"]["output"] == path.string());
  CHECK(std::abs(j["result"]["deviation_sigmas"].get<double>()) < 4);
}

TEST_CASE("histograms") {
  const auto three = lab({"histogram", "--preset", "skylake_ddr4_2ch", "--pattern", "three-class"});
  CHECK(three.code == 0);
  CHECK(three.out.rfind("# manifest ", 0) == 0);
  CHECK(count_modes(csv_rows(three.out), 40) >= 3);

  // a19 feeds BG1 and Channel: different bank.
  const auto cross = lab({"histogram", "--preset", "skylake_ddr4_2ch", "--pattern", "pair", "--a", "0x0", "--b",
                          "0x80000", "--samples", "500"});
  const auto cross_rows = csv_rows(cross.out);
  CHECK(count_modes(cross_rows, 40) == 1);
  CHECK(cross_rows.back().first < 265);

  // a23 is a row bit outside every function: same bank, other row.
  const auto same = lab({"histogram", "--preset", "skylake_ddr4_2ch", "--pattern", "pair", "--a", "0x0", "--b",
                         "0x800000", "--samples", "500"});
  const auto same_rows = csv_rows(same.out);
  CHECK(count_modes(same_rows, 40) == 1);
  CHECK(same_rows.front().first > 265);
}

TEST_CASE("config files from preset show feed --config") {
  const auto path = scratch("ivy2d.json");
  const auto shown = lab({"--output", path.string(), "preset", "show", "ivyhaswell_ddr3_2ch2d"});
  CHECK(shown.code == 0);
  const auto r = lab({"reveng", "probe", "--config", path.string(), "--check"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["result"]["check"]["exact"] == true);
}

TEST_CASE("probe observations round-trip through a file") {
  const auto obs = scratch("obs.jsonl");
  CHECK(lab({"reveng", "probe", "--preset", "skylake_ddr4_2ch", "--observations-out", obs.string()}).code == 0);
  const auto r = lab({"reveng", "probe", "--preset", "skylake_ddr4_2ch", "--observations", obs.string(), "--check"});
  CHECK(r.code == 0);
}

TEST_CASE("covert channel commands") {
  const auto run1 = lab({"covert", "run", "--preset", "skylake_ddr4_2ch", "--tuples", "8", "--period", "262144",
                         "--payload", "deadbeefcafef00d"});
  CHECK(run1.code == 0);
  const auto j = json::parse(run1.out);
  CHECK(j["result"]["received"] == "deadbeefcafef00d");
  CHECK(j["result"]["error_probability"] == 0.0);

  const auto sweep = lab({"covert", "sweep", "--preset", "skylake_ddr4_2ch", "--periods", "262144,4096,512",
                          "--bits", "256"});
  CHECK(sweep.code == 0);
  CHECK(sweep.out.find("period,raw_bps,error,capacity_bps") != std::string::npos);

  const auto bad = lab({"covert", "run", "--preset", "skylake_ddr4_2ch", "--sync", "clock", "--payload", "ff"});
  CHECK(bad.code == 1);
  CHECK(json::parse(bad.err)["error"] == "InvalidFraming");
}

TEST_CASE("side channel commands") {
  const auto victim = scratch("victim.json");
  {
    json v{{"targets", {"0x12345640"}}, {"noise_rate", 0.0}, {"burst_count", 4}, {"burst_spacing", 500}};
    v["schedule"] = json::array();
    for (int i = 0; i < 10; ++i) v["schedule"].push_back(100000 + i * 200000);
    std::ofstream(victim) << v.dump();
  }
  const auto t = lab({"sidechannel", "template", "--preset", "skylake_ddr4_2ch", "--victim", victim.string()});
  CHECK(t.code == 0);
  const auto tj = json::parse(t.out);
  CHECK(tj["result"]["selected"].size() > 0);
  CHECK(tj["result"]["false_positives"] == 0);

  const auto m = lab({"sidechannel", "monitor", "--preset", "skylake_ddr4_2ch", "--victim", victim.string()});
  CHECK(m.code == 0);
  CHECK(m.out.find("cycle,detected") != std::string::npos);
  CHECK(m.out.find("\"detections\":10") != std::string::npos);
}

TEST_CASE("rowhammer pairs") {
  const auto r = lab({"rowhammer", "pairs", "--preset", "ivyhaswell_ddr3_1ch", "--region", "0x0:0x400000"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["result"]["count"].get<int>() > 0);
  const auto none = lab({"rowhammer", "pairs", "--preset", "ivyhaswell_ddr3_1ch", "--region", "0x0:0x20000"});
  CHECK(none.code == 1);
  CHECK(json::parse(none.err)["error"] == "NoPairsFound");
}
