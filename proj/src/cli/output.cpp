#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "drama/error.hpp"

namespace drama::cli {

DramConfig Source::load() const {
  if (!preset.empty() && !config_path.empty()) throw UsageError("--preset and --config are mutually exclusive");
  if (!preset.empty()) return load_preset(preset);
  if (config_path.empty()) throw UsageError("one of --preset or --config is required");
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot read config file " + config_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Parse, config_path + ": " + e.what());
  }
  return config_from_json(doc);
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  if (!source.preset.empty()) j["preset"] = source.preset;
  if (!source.config_path.empty()) j["config"] = source.config_path;
  j["seed"] = seed;
  j["params"] = params;
  j["output"] = output.empty() ? nlohmann::json(nullptr) : nlohmann::json(output);
  j["tool_version"] = kToolVersion;
  return j;
}

void write_atomic(const std::string &path, const std::string &content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw UsageError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw UsageError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw UsageError("cannot move output into place at " + path + ": " + ec.message());
  }
}

void emit(const Globals &g, const std::string &text, std::ostream &out) {
  if (g.output.empty()) {
    out << text;
  } else {
    write_atomic(g.output, text);
  }
}

void emit_json(const Globals &g, const Manifest &m, const nlohmann::json &result, std::ostream &out) {
  nlohmann::json doc;
  doc["manifest"] = m.to_json();
  doc["result"] = result;
  emit(g, doc.dump(2) + "\n", out);
}

void emit_csv(const Globals &g, const Manifest &m, const std::string &header, const std::vector<std::string> &rows,
              std::ostream &out) {
  std::ostringstream os;
  os << "# manifest " << m.to_json().dump() << '\n' << header << '\n';
  for (const auto &r : rows) os << r << '\n';
  emit(g, os.str(), out);
}

nlohmann::json error_json(const std::string &kind, const std::string &message) {
  return nlohmann::json{{"error", kind}, {"message", message}};
}

}  // namespace drama::cli
