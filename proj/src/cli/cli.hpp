#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drama/dram_config.hpp"

namespace drama::cli {

inline constexpr const char *kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kAnalysisFailure = 1, kUsageError = 2 };

/// Bad flags or inputs; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string output;  // empty: standard output
};

/// Where the DramConfig comes from: a preset name or a JSON file.
struct Source {
  std::string preset;
  std::string config_path;

  DramConfig load() const;
};

/// Recorded at the top of every result so a run can be repeated exactly.
struct Manifest {
  std::string subcommand;
  Source source;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
  std::string output;

  nlohmann::json to_json() const;
};

/// Writes `text` to the --output file (atomically) or to `out`.
void emit(const Globals &g, const std::string &text, std::ostream &out);
/// {"manifest": ..., "result": ...}, two-space indented.
void emit_json(const Globals &g, const Manifest &m, const nlohmann::json &result, std::ostream &out);
/// "# manifest {...}" followed by the header row and the data rows.
void emit_csv(const Globals &g, const Manifest &m, const std::string &header, const std::vector<std::string> &rows,
              std::ostream &out);

/// Temp file in the target directory, then rename.
void write_atomic(const std::string &path, const std::string &content);

nlohmann::json error_json(const std::string &kind, const std::string &message);

/// Entry point shared by the binary and the tests; returns the exit code.
int run(std::vector<std::string> args, std::ostream &out, std::ostream &err);

}  // namespace drama::cli
