#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "nemesys/netsim/simulator.hpp"

namespace nemesys::netsim {

// events.jsonl: {"ts_ms":1500,"ue":"u0042","kind":"PROMOTE_I2F","cell":"c1","cost":3}
std::string event_to_jsonl(const SignalingEvent& event);
SignalingEvent event_from_jsonl(const std::string& line);
void write_events_jsonl(std::ostream& out, const std::vector<SignalingEvent>& events);
std::vector<SignalingEvent> read_events_jsonl(const std::filesystem::path& path);

// cdr.csv, charge units with exactly three decimals
inline constexpr const char* kCdrCsvHeader =
    "record_id,ue_id,service,start_ts_ms,duration_s,bytes_up,bytes_down,peer,charge_units,cell_id";
std::string cdr_to_csv(const ChargingDataRecord& cdr);
ChargingDataRecord cdr_from_csv(const std::string& line);
void write_cdr_csv(std::ostream& out, const std::vector<ChargingDataRecord>& cdrs);
std::vector<ChargingDataRecord> read_cdr_csv(const std::filesystem::path& path);

nlohmann::ordered_json stations_to_json(const std::vector<StationStats>& stations);

/// Ground-truth sidecar written next to a simulated run: horizon, attacks
/// (as applied) and infected UE ids. Used for labelling training windows.
nlohmann::ordered_json truth_to_json(const Scenario& scenario);

/// Writes events.jsonl, cdr.csv, stations.json and truth.json into `dir`.
void write_run(const std::filesystem::path& dir, const Scenario& scenario, const TraceSet& trace);

}  // namespace nemesys::netsim
