#include "nemesys/netsim/trace_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "nemesys/common/error.hpp"
#include "nemesys/common/io.hpp"

namespace nemesys::netsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string event_to_jsonl(const SignalingEvent& e) {
  ordered_json doc;
  doc["ts_ms"] = to_ms(e.ts);
  doc["ue"] = e.ue_id;
  doc["kind"] = to_string(e.kind);
  doc["cell"] = e.cell_id;
  doc["cost"] = e.cost;
  return doc.dump();
}

SignalingEvent event_from_jsonl(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchemaViolation, std::string("events.jsonl: ") + ex.what());
  }
  try {
    SignalingEvent e;
    e.ts = static_cast<double>(doc.at("ts_ms").get<std::int64_t>()) / 1000.0;
    e.ue_id = doc.at("ue").get<std::string>();
    const auto kind = parse_signaling_kind(doc.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kSchemaViolation, "events.jsonl: unknown kind in '" + line + "'");
    e.kind = *kind;
    e.cell_id = doc.at("cell").get<std::string>();
    e.cost = doc.at("cost").get<int>();
    if (e.cost < 1) throw Error(ErrorCode::kSchemaViolation, "events.jsonl: cost must be >= 1");
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchemaViolation, std::string("events.jsonl: ") + ex.what());
  }
}

void write_events_jsonl(std::ostream& out, const std::vector<SignalingEvent>& events) {
  for (const auto& e : events) out << event_to_jsonl(e) << '\n';
}

std::vector<SignalingEvent> read_events_jsonl(const std::filesystem::path& path) {
  std::vector<SignalingEvent> events;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    events.push_back(event_from_jsonl(line));
  }
  return events;
}

std::string cdr_to_csv(const ChargingDataRecord& c) {
  std::ostringstream ss;
  ss << c.record_id << ',' << c.ue_id << ',' << to_string(c.service) << ',' << to_ms(c.start_ts) << ','
     << format_milli(to_ms(c.duration)) << ',' << c.bytes_up << ',' << c.bytes_down << ',' << c.peer << ','
     << format_milli(c.charge_milli) << ',' << c.cell_id;
  return ss.str();
}

ChargingDataRecord cdr_from_csv(const std::string& line) {
  const auto f = split_csv_line(line);
  if (f.size() != 10) throw Error(ErrorCode::kSchemaViolation, "cdr.csv: expected 10 fields in '" + line + "'");
  try {
    ChargingDataRecord c;
    c.record_id = std::stoull(f[0]);
    c.ue_id = f[1];
    const auto service = parse_service_kind(f[2]);
    if (!service) throw Error(ErrorCode::kSchemaViolation, "cdr.csv: unknown service '" + f[2] + "'");
    c.service = *service;
    c.start_ts = static_cast<double>(std::stoll(f[3])) / 1000.0;
    c.duration = static_cast<double>(parse_milli(f[4])) / 1000.0;
    c.bytes_up = std::stoull(f[5]);
    c.bytes_down = std::stoull(f[6]);
    c.peer = f[7];
    c.charge_milli = parse_milli(f[8]);
    c.cell_id = f[9];
    return c;
  } catch (const std::logic_error& ex) {
    throw Error(ErrorCode::kSchemaViolation, "cdr.csv: bad number in '" + line + "'");
  }
}

void write_cdr_csv(std::ostream& out, const std::vector<ChargingDataRecord>& cdrs) {
  out << kCdrCsvHeader << '\n';
  for (const auto& c : cdrs) out << cdr_to_csv(c) << '\n';
}

std::vector<ChargingDataRecord> read_cdr_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != kCdrCsvHeader) {
    throw Error(ErrorCode::kSchemaViolation, "cdr.csv: missing or unexpected header in " + path.string());
  }
  std::vector<ChargingDataRecord> cdrs;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) cdrs.push_back(cdr_from_csv(lines[i]));
  }
  return cdrs;
}

ordered_json stations_to_json(const std::vector<StationStats>& stations) {
  ordered_json doc = ordered_json::array();
  for (const auto& s : stations) {
    ordered_json series = ordered_json::array();
    for (const auto& p : s.series) {
      series.push_back(ordered_json{{"t_end", p.t_end},
                                    {"mean_occupancy", p.mean_occupancy},
                                    {"queue_length", p.queue_length},
                                    {"served", p.served}});
    }
    doc.push_back(ordered_json{{"station", s.station_id},
                               {"service_rate", s.service_rate},
                               {"arrivals", s.arrivals},
                               {"served", s.served},
                               {"time_average_occupancy", s.time_average_occupancy},
                               {"mean_sojourn", s.mean_sojourn},
                               {"series", std::move(series)}});
  }
  return doc;
}

ordered_json truth_to_json(const Scenario& scenario) {
  ordered_json attacks = ordered_json::array();
  for (const auto& a : scenario.attacks) attacks.push_back(attacks::to_json(a));
  ordered_json infected = ordered_json::array();
  for (const auto& ue : scenario.ues) {
    if (ue.infected) infected.push_back(ue.ue_id);
  }
  return ordered_json{{"seed", scenario.seed},
                      {"horizon_s", scenario.horizon},
                      {"attacks", std::move(attacks)},
                      {"infected", std::move(infected)}};
}

void write_run(const std::filesystem::path& dir, const Scenario& scenario, const TraceSet& trace) {
  std::filesystem::create_directories(dir);
  std::ostringstream events;
  write_events_jsonl(events, trace.signaling);
  write_text_file(dir / "events.jsonl", events.str());
  std::ostringstream cdrs;
  write_cdr_csv(cdrs, trace.cdrs);
  write_text_file(dir / "cdr.csv", cdrs.str());
  write_text_file(dir / "stations.json", stations_to_json(trace.stations).dump(2) + "\n");
  write_text_file(dir / "truth.json", truth_to_json(scenario).dump(2) + "\n");
}

}  // namespace nemesys::netsim
