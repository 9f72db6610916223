#include "nemesys/netsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "nemesys/attacks/inject.hpp"
#include "nemesys/common/error.hpp"
#include "nemesys/netsim/profile.hpp"

namespace nemesys::netsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kMalformedConfig, path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      malformed(path + "." + key, "unknown field");
    }
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& obj, const char* key, double fallback, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) malformed(path + "." + key, "expected a number");
  return v->get<double>();
}

std::int64_t integer_at(const json& obj, const char* key, std::int64_t fallback, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) malformed(path + "." + key, "expected an integer");
  return v->get<std::int64_t>();
}

std::string string_at(const json& obj, const char* key, const std::string& fallback, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) malformed(path + "." + key, "expected a string");
  return v->get<std::string>();
}

const json& object_or_empty(const json& obj, const char* key, const std::string& path) {
  static const json kEmpty = json::object();
  const json* v = find(obj, key);
  if (!v) return kEmpty;
  if (!v->is_object()) malformed(path + "." + key, "expected an object");
  return *v;
}

RrcParams parse_rrc(const json& doc) {
  const std::string path = "rrc";
  reject_unknown_keys(doc, path,
                      {"promote_i2f_cost", "promote_f2d_cost", "demote_d2f_cost", "demote_f2i_cost", "attach_cost",
                       "detach_cost", "paging_cost", "dch_volume_threshold", "t_dch_inactivity", "t_fach_inactivity"});
  RrcParams p;
  p.promote_i2f_cost = static_cast<int>(integer_at(doc, "promote_i2f_cost", p.promote_i2f_cost, path));
  p.promote_f2d_cost = static_cast<int>(integer_at(doc, "promote_f2d_cost", p.promote_f2d_cost, path));
  p.demote_d2f_cost = static_cast<int>(integer_at(doc, "demote_d2f_cost", p.demote_d2f_cost, path));
  p.demote_f2i_cost = static_cast<int>(integer_at(doc, "demote_f2i_cost", p.demote_f2i_cost, path));
  p.attach_cost = static_cast<int>(integer_at(doc, "attach_cost", p.attach_cost, path));
  p.detach_cost = static_cast<int>(integer_at(doc, "detach_cost", p.detach_cost, path));
  p.paging_cost = static_cast<int>(integer_at(doc, "paging_cost", p.paging_cost, path));
  p.dch_volume_threshold = number_at(doc, "dch_volume_threshold", p.dch_volume_threshold, path);
  p.t_dch_inactivity = number_at(doc, "t_dch_inactivity", p.t_dch_inactivity, path);
  p.t_fach_inactivity = number_at(doc, "t_fach_inactivity", p.t_fach_inactivity, path);
  p.validate();
  return p;
}

std::int64_t tariff_at(const json& doc, const char* key, std::int64_t fallback) {
  const double units = number_at(doc, key, static_cast<double>(fallback) / 1000.0, "tariffs");
  if (units < 0) malformed(std::string("tariffs.") + key, "must be >= 0");
  return std::llround(units * 1000.0);
}

TariffTable parse_tariffs(const json& doc) {
  reject_unknown_keys(doc, "tariffs", {"data_per_kib", "voice_per_second", "sms_per_message", "premium_per_message"});
  TariffTable t;
  t.data_milli_per_kib = tariff_at(doc, "data_per_kib", t.data_milli_per_kib);
  t.voice_milli_per_second = tariff_at(doc, "voice_per_second", t.voice_milli_per_second);
  t.sms_milli_per_message = tariff_at(doc, "sms_per_message", t.sms_milli_per_message);
  t.premium_milli_per_message = tariff_at(doc, "premium_per_message", t.premium_milli_per_message);
  return t;
}

std::string ue_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%04zu", index);
  return buf;
}

ordered_json dist_json(const Distribution& d) {
  static constexpr const char* kNames[] = {"constant", "exponential", "lognormal", "uniform"};
  return ordered_json{{"kind", kNames[static_cast<int>(d.kind)]}, {"a", d.a}, {"b", d.b}};
}

}  // namespace

std::size_t Scenario::ue_index(const std::string& ue_id) const {
  for (std::size_t i = 0; i < ues.size(); ++i) {
    if (ues[i].ue_id == ue_id) return i;
  }
  return static_cast<std::size_t>(-1);
}

std::size_t Scenario::station_index(const std::string& station_id) const {
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (stations[i].station_id == station_id) return i;
  }
  return static_cast<std::size_t>(-1);
}

void Scenario::validate() const {
  if (ues.empty()) throw Error(ErrorCode::kMalformedConfig, "scenario needs at least one UE");
  if (stations.empty()) throw Error(ErrorCode::kMalformedConfig, "scenario needs at least one station");
  if (!(horizon > 0)) throw Error(ErrorCode::kMalformedConfig, "horizon must be > 0");
  if (!(stats_interval > 0)) throw Error(ErrorCode::kMalformedConfig, "stats_interval must be > 0");
  rrc.validate();
  for (const auto& st : stations) {
    if (!(st.service_rate > 0)) throw Error(ErrorCode::kMalformedConfig, "station " + st.station_id + ": service_rate must be > 0");
  }
  for (auto kind : kAllSignalingKinds) {
    const auto it = routing.find(kind);
    if (it == routing.end()) {
      throw Error(ErrorCode::kUnroutedEventKind, std::string(to_string(kind)) + " has no station");
    }
    if (station_index(it->second) == static_cast<std::size_t>(-1)) {
      throw Error(ErrorCode::kMalformedConfig, "routing." + std::string(to_string(kind)) + ": unknown station '" + it->second + "'");
    }
  }
}

Scenario build_scenario(const json& config) {
  if (!config.is_object()) malformed("config", "expected a JSON object");
  reject_unknown_keys(config, "config",
                      {"seed", "horizon_s", "start_hour", "cells", "cdr_hash_key", "stats_interval_s", "rrc", "tariffs",
                       "ue_groups", "stations", "routing", "default_station", "attacks"});
  Scenario sc;
  const std::int64_t seed = integer_at(config, "seed", 0, "config");
  if (seed < 0) malformed("config.seed", "must be >= 0");
  sc.seed = static_cast<std::uint64_t>(seed);
  sc.horizon = number_at(config, "horizon_s", sc.horizon, "config");
  sc.start_hour = number_at(config, "start_hour", sc.start_hour, "config");
  if (sc.start_hour < 0 || sc.start_hour >= 24) malformed("config.start_hour", "must be in [0, 24)");
  sc.cdr_hash_key = string_at(config, "cdr_hash_key", sc.cdr_hash_key, "config");
  sc.stats_interval = number_at(config, "stats_interval_s", sc.stats_interval, "config");
  const std::int64_t cells = integer_at(config, "cells", 1, "config");
  if (cells < 1) malformed("config.cells", "must be >= 1");
  sc.rrc = parse_rrc(object_or_empty(config, "rrc", "config"));
  sc.tariffs = parse_tariffs(object_or_empty(config, "tariffs", "config"));

  // UE groups; group names resolve attack bot references.
  std::map<std::string, std::vector<std::string>> groups;
  json ue_groups = json::array({json{{"count", 1}, {"profile", "WEB"}}});
  if (const json* g = find(config, "ue_groups")) {
    if (!g->is_array()) malformed("config.ue_groups", "expected an array");
    ue_groups = *g;
  }
  for (std::size_t gi = 0; gi < ue_groups.size(); ++gi) {
    const json& group = ue_groups[gi];
    const std::string path = "ue_groups[" + std::to_string(gi) + "]";
    if (!group.is_object()) malformed(path, "expected an object");
    reject_unknown_keys(group, path, {"name", "count", "profile", "profile_seed", "session_rate"});
    const std::int64_t count = integer_at(group, "count", 1, path);
    if (count < 0) malformed(path + ".count", "must be >= 0");
    const std::string kind = string_at(group, "profile", "WEB", path);
    if (!parse_profile_kind(kind)) malformed(path + ".profile", "unknown profile '" + kind + "'");
    const auto profile_seed =
        static_cast<std::uint64_t>(integer_at(group, "profile_seed", static_cast<std::int64_t>(sc.seed + gi), path));
    TrafficProfile profile = synth_profile(kind, profile_seed);
    if (find(group, "session_rate")) {
      profile.session_rate = number_at(group, "session_rate", 0.0, path);
      if (profile.session_rate < 0) malformed(path + ".session_rate", "must be >= 0");
    }
    const std::string name = string_at(group, "name", "group" + std::to_string(gi), path);
    for (std::int64_t k = 0; k < count; ++k) {
      UEState ue;
      ue.ue_id = ue_name(sc.ues.size());
      ue.cell_id = "c" + std::to_string(sc.ues.size() % static_cast<std::size_t>(cells) + 1);
      ue.profile = profile;
      groups[name].push_back(ue.ue_id);
      sc.ues.push_back(std::move(ue));
    }
  }
  if (sc.ues.empty()) malformed("config.ue_groups", "scenario needs at least one UE");

  json stations = json::array({json{{"id", "core"}, {"service_rate", 1000.0}}});
  if (const json* s = find(config, "stations")) {
    if (!s->is_array() || s->empty()) malformed("config.stations", "expected a non-empty array");
    stations = *s;
  }
  std::set<std::string> station_ids;
  for (std::size_t si = 0; si < stations.size(); ++si) {
    const std::string path = "stations[" + std::to_string(si) + "]";
    if (!stations[si].is_object()) malformed(path, "expected an object");
    reject_unknown_keys(stations[si], path, {"id", "service_rate"});
    QueueStation st;
    st.station_id = string_at(stations[si], "id", "station" + std::to_string(si), path);
    st.service_rate = number_at(stations[si], "service_rate", 1000.0, path);
    if (!(st.service_rate > 0)) malformed(path + ".service_rate", "must be > 0");
    if (!station_ids.insert(st.station_id).second) malformed(path + ".id", "duplicate station '" + st.station_id + "'");
    sc.stations.push_back(std::move(st));
  }

  std::string default_station = string_at(config, "default_station", "", "config");
  const json* routing = find(config, "routing");
  if (default_station.empty() && !routing && sc.stations.size() == 1) default_station = sc.stations.front().station_id;
  if (!default_station.empty()) {
    if (!station_ids.contains(default_station)) malformed("config.default_station", "unknown station '" + default_station + "'");
    for (auto kind : kAllSignalingKinds) sc.routing[kind] = default_station;
  }
  if (routing) {
    if (!routing->is_object()) malformed("config.routing", "expected an object");
    for (const auto& [key, value] : routing->items()) {
      const auto kind = parse_signaling_kind(key);
      if (!kind) malformed("config.routing." + key, "unknown event kind");
      if (!value.is_string()) malformed("config.routing." + key, "expected a station id");
      if (!station_ids.contains(value.get<std::string>())) {
        malformed("config.routing." + key, "unknown station '" + value.get<std::string>() + "'");
      }
      sc.routing[*kind] = value.get<std::string>();
    }
  }
  sc.validate();

  if (const json* attack_list = find(config, "attacks")) {
    if (!attack_list->is_array()) malformed("config.attacks", "expected an array");
    for (std::size_t ai = 0; ai < attack_list->size(); ++ai) {
      json doc = (*attack_list)[ai];
      if (doc.is_object() && doc.contains("bot_group")) {
        const auto group_name = doc["bot_group"];
        if (!group_name.is_string() || !groups.contains(group_name.get<std::string>())) {
          malformed("attacks[" + std::to_string(ai) + "].bot_group", "unknown UE group");
        }
        doc.erase("bot_group");
        doc["bot_ids"] = groups[group_name.get<std::string>()];
      }
      sc = attacks::apply_attack(std::move(sc), attacks::attack_from_json(doc));
    }
  }
  return sc;
}

ordered_json to_json(const Scenario& sc) {
  ordered_json doc;
  doc["seed"] = sc.seed;
  doc["horizon_s"] = sc.horizon;
  doc["start_hour"] = sc.start_hour;
  doc["cdr_hash_key"] = sc.cdr_hash_key;
  doc["stats_interval_s"] = sc.stats_interval;
  const auto& r = sc.rrc;
  doc["rrc"] = ordered_json{{"promote_i2f_cost", r.promote_i2f_cost}, {"promote_f2d_cost", r.promote_f2d_cost},
                            {"demote_d2f_cost", r.demote_d2f_cost},   {"demote_f2i_cost", r.demote_f2i_cost},
                            {"attach_cost", r.attach_cost},           {"detach_cost", r.detach_cost},
                            {"paging_cost", r.paging_cost},           {"dch_volume_threshold", r.dch_volume_threshold},
                            {"t_dch_inactivity", r.t_dch_inactivity}, {"t_fach_inactivity", r.t_fach_inactivity}};
  doc["tariffs"] = ordered_json{{"data_milli_per_kib", sc.tariffs.data_milli_per_kib},
                                {"voice_milli_per_second", sc.tariffs.voice_milli_per_second},
                                {"sms_milli_per_message", sc.tariffs.sms_milli_per_message},
                                {"premium_milli_per_message", sc.tariffs.premium_milli_per_message}};
  ordered_json ues = ordered_json::array();
  for (const auto& ue : sc.ues) {
    const auto& p = ue.profile;
    ordered_json profile{{"kind", to_string(p.kind)},
                         {"session_rate", p.session_rate},
                         {"session_size", dist_json(p.session_size)},
                         {"think_time", dist_json(p.think_time)},
                         {"bursts_per_session", p.bursts_per_session},
                         {"call_duration", dist_json(p.call_duration)},
                         {"mix", {p.mix.data, p.mix.voice, p.mix.sms}},
                         {"premium_sms_fraction", p.premium_sms_fraction},
                         {"mobile_terminated_fraction", p.mobile_terminated_fraction},
                         {"diurnal_shape", p.diurnal_shape}};
    ues.push_back(ordered_json{{"ue_id", ue.ue_id},
                               {"cell_id", ue.cell_id},
                               {"rrc", to_string(ue.rrc)},
                               {"infected", ue.infected},
                               {"profile", std::move(profile)}});
  }
  doc["ues"] = std::move(ues);
  ordered_json stations = ordered_json::array();
  for (const auto& st : sc.stations) {
    stations.push_back(ordered_json{{"id", st.station_id}, {"service_rate", st.service_rate}});
  }
  doc["stations"] = std::move(stations);
  ordered_json routing = ordered_json::object();
  for (const auto& [kind, station] : sc.routing) routing[std::string(to_string(kind))] = station;
  doc["routing"] = std::move(routing);
  ordered_json attack_list = ordered_json::array();
  for (const auto& a : sc.attacks) attack_list.push_back(attacks::to_json(a));
  doc["attacks"] = std::move(attack_list);
  ordered_json injected = ordered_json::array();
  for (const auto& s : sc.injected) {
    injected.push_back(ordered_json{{"ts", s.ts},
                                    {"ue", sc.ues[s.ue_index].ue_id},
                                    {"kind", s.kind == Stimulus::Kind::kDataArrival ? "DATA_ARRIVAL" : "PREMIUM_SMS"},
                                    {"bytes", s.bytes},
                                    {"peer", s.peer},
                                    {"attack", s.attack_index}});
  }
  doc["injected"] = std::move(injected);
  return doc;
}

Scenario strip_attacks(Scenario scenario) {
  scenario.attacks.clear();
  scenario.injected.clear();
  for (auto& ue : scenario.ues) ue.infected = false;
  return scenario;
}

}  // namespace nemesys::netsim
