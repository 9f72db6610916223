// Criteria 7 and 8 drive the built `nemesys` binary and inspect the files it
// writes with plain JSON parsing.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "checks.hpp"

namespace acceptance {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> docs;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) docs.push_back(json::parse(line));
  }
  return docs;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nemesys_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// simulate + detect into `dir`; false if either command failed.
bool pipeline(const fs::path& config, const fs::path& dir, const std::string& seed) {
  const std::string cli = quoted(NEMESYS_CLI);
  const std::string detector = quoted(fs::path(NEMESYS_CONFIGS) / "detector.json");
  if (shell(cli + " simulate --config " + quoted(config) + " --out " + quoted(dir) + " --seed " + seed) != 0) return false;
  return shell(cli + " detect --events " + quoted(dir / "events.jsonl") + " --detector-config " + detector + " --seed " +
               seed + " --out " + quoted(dir / "alerts.jsonl")) == 0;
}

}  // namespace

Outcome check_cli_determinism() {
  const auto root = scratch("determinism");
  bool ok = true;
  std::string detail;
  for (const char* name : {"scenario.json", "scenario_fraud.json"}) {
    const fs::path config = fs::path(NEMESYS_CONFIGS) / name;
    const auto a = root / (std::string(name) + ".a");
    const auto b = root / (std::string(name) + ".b");
    const auto c = root / (std::string(name) + ".c");
    if (!pipeline(config, a, "77") || !pipeline(config, b, "77") || !pipeline(config, c, "78")) {
      fs::remove_all(root);
      return {false, std::string("a command failed for ") + name};
    }
    std::size_t identical = 0;
    for (const char* f : {"events.jsonl", "cdr.csv", "alerts.jsonl"}) identical += slurp(a / f) == slurp(b / f);
    const auto alerts = jsonl(a / "alerts.jsonl").size();
    const auto events = jsonl(a / "events.jsonl").size();
    // A different seed must change the trace, or equality above proves nothing.
    const bool seeded = slurp(a / "events.jsonl") != slurp(c / "events.jsonl");
    ok = ok && identical == 3 && alerts > 0 && events > 0 && seeded;
    detail += fmt("%s%s: %zu/3 files identical (%zu events, %zu alerts)%s", detail.empty() ? "" : "; ", name, identical,
                  events, alerts, seeded ? "" : ", seed ignored");
  }
  fs::remove_all(root);
  return {ok, detail};
}

Outcome check_honeynode() {
  const auto root = scratch("honeynode");
  const fs::path fixture = fs::path(NEMESYS_FIXTURES) / "honeynode_premium.jsonl";
  const fs::path config = fs::path(NEMESYS_CONFIGS) / "honeynode.json";
  const auto cfg = json::parse(slurp(config));
  if (!cfg.at("block_premium").get<bool>()) return {false, "shipped honeynode config does not block premium numbers"};
  const auto prefixes = cfg.at("premium_prefixes").get<std::vector<std::string>>();
  const auto is_premium = [&](const json& doc) {
    if (doc.value("event_kind", "") != "SMS_SEND" || !doc.contains("number")) return false;
    const auto number = doc["number"].get<std::string>();
    for (const auto& p : prefixes) {
      if (number.compare(0, p.size(), p) == 0) return true;
    }
    return false;
  };

  const auto forwarded_path = root / "forwarded.jsonl";
  const auto log_path = root / "wiretap.jsonl";
  if (shell(quoted(NEMESYS_CLI) + " honeynode --config " + quoted(config) + " --events " + quoted(fixture) + " --out " +
            quoted(forwarded_path) + " --log " + quoted(log_path)) != 0) {
    fs::remove_all(root);
    return {false, "honeynode command failed"};
  }

  const auto input = jsonl(fixture);
  const auto forwarded = jsonl(forwarded_path);
  const auto log = jsonl(log_path);
  fs::remove_all(root);

  std::size_t premium_in = 0, premium_forwarded = 0, premium_logged_blocked = 0, log_mismatch = 0;
  for (const auto& e : input) premium_in += is_premium(e);
  for (const auto& t : forwarded) premium_forwarded += is_premium(t);
  // The wiretap log holds every input event, in order, with its decision.
  if (log.size() != input.size()) log_mismatch = std::max(log.size(), input.size());
  for (std::size_t i = 0; i < std::min(log.size(), input.size()); ++i) {
    if (!log[i].contains("event") || log[i]["event"] != input[i]) {
      ++log_mismatch;
      continue;
    }
    premium_logged_blocked += is_premium(input[i]) && log[i]["decision"] == "BLOCK";
  }
  // Forwarded stream: the non-premium inputs in order, as honeynode traces.
  std::size_t j = 0, forward_mismatch = 0;
  for (const auto& e : input) {
    if (is_premium(e)) continue;
    if (j >= forwarded.size()) {
      ++forward_mismatch;
      continue;
    }
    json stripped = forwarded[j++];
    forward_mismatch += stripped.value("source", "") != "honeynode:" + cfg.at("node_id").get<std::string>();
    stripped.erase("source");
    forward_mismatch += stripped != e;
  }
  forward_mismatch += forwarded.size() - j;

  const double presence = premium_in ? 100.0 * static_cast<double>(premium_logged_blocked) / premium_in : 0.0;
  const bool ok = premium_in > 0 && premium_forwarded == 0 && premium_logged_blocked == premium_in &&
                  log_mismatch == 0 && forward_mismatch == 0;
  return {ok, fmt("%zu events, %zu premium: %zu forwarded, %.1f%% in wiretap log as BLOCK; log mismatches %zu, "
                  "forward-stream mismatches %zu",
                  input.size(), premium_in, premium_forwarded, presence, log_mismatch, forward_mismatch)};
}

}  // namespace acceptance
