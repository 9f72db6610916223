#include "nemesys/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nemesys/common/error.hpp"

namespace nemesys::features {

using netsim::ChargingDataRecord;
using netsim::SignalingEvent;
using netsim::SignalingKind;
using nlohmann::json;
using nlohmann::ordered_json;

bool Scope::contains(const SignalingEvent& e) const {
  switch (level) {
    case Level::kNetwork: return true;
    case Level::kCell: return e.cell_id == id;
    case Level::kUe: return e.ue_id == id;
  }
  return false;
}

// CDRs carry anonymized UE ids, so a UE scope matches them by that id.
bool Scope::contains(const ChargingDataRecord& c) const {
  switch (level) {
    case Level::kNetwork: return true;
    case Level::kCell: return c.cell_id == id;
    case Level::kUe: return c.ue_id == id;
  }
  return false;
}

std::string to_string(const Scope& scope) {
  switch (scope.level) {
    case Scope::Level::kNetwork: return "network";
    case Scope::Level::kCell: return "cell:" + scope.id;
    case Scope::Level::kUe: return "ue:" + scope.id;
  }
  return "network";
}

Scope parse_scope(const std::string& text) {
  if (text == "network") return Scope::network();
  if (text.rfind("cell:", 0) == 0 && text.size() > 5) return Scope::cell(text.substr(5));
  if (text.rfind("ue:", 0) == 0 && text.size() > 3) return Scope::ue(text.substr(3));
  throw Error(ErrorCode::kInvalidArgument, "bad scope '" + text + "'");
}

namespace {

void check_window_params(double width, double stride) {
  if (!(width > 0) || !(stride > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "window width and stride must be positive");
  }
}

void check_ordered(std::span<const SignalingEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].ts < events[i - 1].ts) {
      throw Error(ErrorCode::kUnorderedStream, "event " + std::to_string(i) + " at t=" + std::to_string(events[i].ts) +
                                                   " precedes its predecessor");
    }
  }
}

// Fills windows whose starts are k*stride for k in [k_first, k_last].
std::vector<Window> cut(std::span<const SignalingEvent> events, std::span<const ChargingDataRecord> cdrs,
                        long k_first, long k_last, double width, double stride, const Scope& scope) {
  std::vector<Window> windows;
  if (k_last < k_first) return windows;
  windows.reserve(static_cast<std::size_t>(k_last - k_first + 1));
  for (long k = k_first; k <= k_last; ++k) {
    windows.push_back(Window{static_cast<double>(k) * stride, width, scope, {}, {}});
  }
  // With overlapping windows an item belongs to several; visit each window's range.
  std::size_t lo = 0;
  for (auto& w : windows) {
    while (lo < events.size() && events[lo].ts < w.start) ++lo;
    for (std::size_t i = lo; i < events.size() && events[i].ts < w.end(); ++i) {
      if (scope.contains(events[i])) w.events.push_back(events[i]);
    }
  }
  if (!cdrs.empty()) {
    std::vector<const ChargingDataRecord*> sorted;
    for (const auto& c : cdrs) {
      if (scope.contains(c)) sorted.push_back(&c);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto* a, const auto* b) { return a->start_ts < b->start_ts; });
    std::size_t clo = 0;
    for (auto& w : windows) {
      while (clo < sorted.size() && sorted[clo]->start_ts < w.start) ++clo;
      for (std::size_t i = clo; i < sorted.size() && sorted[i]->start_ts < w.end(); ++i) w.cdrs.push_back(*sorted[i]);
    }
  }
  return windows;
}

}  // namespace

std::vector<Window> windowize(std::span<const SignalingEvent> events, double width, double stride,
                              const Scope& scope) {
  check_window_params(width, stride);
  check_ordered(events);
  double first = -1.0, last = -1.0;
  for (const auto& e : events) {
    if (!scope.contains(e) || e.ts < 0) continue;
    if (first < 0) first = e.ts;
    last = e.ts;
  }
  if (first < 0) return {};
  // First window containing `first`: smallest k with k*stride + width > first.
  long k_first = static_cast<long>(std::floor((first - width) / stride)) + 1;
  k_first = std::max(k_first, 0L);
  while (k_first > 0 && static_cast<double>(k_first - 1) * stride + width > first) --k_first;
  while (static_cast<double>(k_first) * stride + width <= first) ++k_first;
  const long k_last = static_cast<long>(std::floor(last / stride));
  return cut(events, {}, k_first, k_last, width, stride, scope);
}

std::vector<Window> windowize_range(std::span<const SignalingEvent> events, std::span<const ChargingDataRecord> cdrs,
                                    double t_end, double width, double stride, const Scope& scope) {
  check_window_params(width, stride);
  check_ordered(events);
  if (t_end < width) return {};
  const long k_last = static_cast<long>(std::floor((t_end - width) / stride + 1e-9));
  return cut(events, cdrs, 0, k_last, width, stride, scope);
}

InterEventStats inter_event_stats(std::span<const double> ts) {
  if (ts.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "need at least 3 timestamps, got " + std::to_string(ts.size()));
  }
  const std::size_t n = ts.size() - 1;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ts[i + 1] - ts[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = ts[i + 1] - ts[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  return {mean, var, mean > 0 ? std::sqrt(var) / mean : 0.0};
}

Autocorr autocorr(std::span<const double> x, std::size_t lag) {
  if (x.size() <= lag) {
    throw Error(ErrorCode::kSeriesTooShort,
                "series of length " + std::to_string(x.size()) + " too short for lag " + std::to_string(lag));
  }
  const std::size_t m = x.size() - lag;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ma += x[i];
    mb += x[i + lag];
  }
  ma /= static_cast<double>(m);
  mb /= static_cast<double>(m);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = x[i] - ma, b = x[i + lag] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (saa <= 0.0 || sbb <= 0.0) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

FeatureVector extract(const Window& w) {
  FeatureVector fv;
  fv.window_start = w.start;
  fv.window_width = w.width;
  fv.scope = w.scope;
  const double width = w.width;

  std::array<std::size_t, netsim::kSignalingKindCount> counts{};
  double cost = 0.0;
  std::map<std::string, std::size_t> per_ue;
  std::vector<double> ts;
  ts.reserve(w.events.size());
  for (const auto& e : w.events) {
    ++counts[static_cast<std::size_t>(e.kind)];
    cost += e.cost;
    ++per_ue[e.ue_id];
    ts.push_back(e.ts);
  }
  for (std::size_t k = 0; k < counts.size(); ++k) fv.rate_by_kind[k] = static_cast<double>(counts[k]) / width;
  fv.total_msg_rate = cost / width;

  const auto count = [&](SignalingKind k) { return static_cast<double>(counts[static_cast<std::size_t>(k)]); };
  const double promotes = count(SignalingKind::kPromoteI2F) + count(SignalingKind::kPromoteF2D);
  const double demotes = count(SignalingKind::kDemoteD2F) + count(SignalingKind::kDemoteF2I);
  fv.promote_demote_ratio = (promotes + 1.0) / (demotes + 1.0);

  fv.active_ue_count = static_cast<double>(per_ue.size());
  std::size_t busiest = 0;
  for (const auto& [ue, n] : per_ue) busiest = std::max(busiest, n);
  fv.max_per_ue_rate = static_cast<double>(busiest) / width;

  std::int64_t premium = 0;
  for (const auto& c : w.cdrs) {
    if (c.service == netsim::ServiceKind::kPremiumSms) premium += c.charge_milli;
  }
  fv.premium_charge_rate = static_cast<double>(premium) / 1000.0 / width;

  if (ts.size() >= 3) {
    const auto iet = inter_event_stats(ts);
    fv.iet_mean = iet.mean;
    fv.iet_var = iet.variance;
    fv.iet_cv = iet.cv;
    fv.iet_valid = true;

    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width - 1e-9)));
    std::vector<double> series(bins, 0.0);
    for (double t : ts) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t - w.start))));
      series[b] += 1.0;
    }
    if (series.size() > 2) {
      const auto ac = autocorr(series, 1);
      fv.lag1_autocorr = ac.value;
      fv.autocorr_zero_variance = ac.zero_variance;
      fv.autocorr_valid = true;
    }
  }
  return fv;
}

ordered_json to_json(const FeatureVector& fv) {
  ordered_json rates;
  for (auto kind : netsim::kAllSignalingKinds) rates[std::string(netsim::to_string(kind))] = fv.rate(kind);
  return ordered_json{{"window_start", fv.window_start},
                      {"window_width", fv.window_width},
                      {"scope", to_string(fv.scope)},
                      {"rate_by_kind", std::move(rates)},
                      {"total_msg_rate", fv.total_msg_rate},
                      {"iet_mean", fv.iet_mean},
                      {"iet_var", fv.iet_var},
                      {"iet_cv", fv.iet_cv},
                      {"lag1_autocorr", fv.lag1_autocorr},
                      {"promote_demote_ratio", fv.promote_demote_ratio},
                      {"active_ue_count", fv.active_ue_count},
                      {"max_per_ue_rate", fv.max_per_ue_rate},
                      {"premium_charge_rate", fv.premium_charge_rate},
                      {"iet_valid", fv.iet_valid},
                      {"autocorr_valid", fv.autocorr_valid},
                      {"autocorr_zero_variance", fv.autocorr_zero_variance}};
}

FeatureVector feature_from_json(const json& doc) {
  try {
    FeatureVector fv;
    fv.window_start = doc.at("window_start").get<double>();
    fv.window_width = doc.at("window_width").get<double>();
    fv.scope = parse_scope(doc.at("scope").get<std::string>());
    const auto& rates = doc.at("rate_by_kind");
    for (auto kind : netsim::kAllSignalingKinds) {
      fv.rate_by_kind[static_cast<std::size_t>(kind)] = rates.at(std::string(netsim::to_string(kind))).get<double>();
    }
    fv.total_msg_rate = doc.at("total_msg_rate").get<double>();
    fv.iet_mean = doc.at("iet_mean").get<double>();
    fv.iet_var = doc.at("iet_var").get<double>();
    fv.iet_cv = doc.at("iet_cv").get<double>();
    fv.lag1_autocorr = doc.at("lag1_autocorr").get<double>();
    fv.promote_demote_ratio = doc.at("promote_demote_ratio").get<double>();
    fv.active_ue_count = doc.at("active_ue_count").get<double>();
    fv.max_per_ue_rate = doc.at("max_per_ue_rate").get<double>();
    fv.premium_charge_rate = doc.at("premium_charge_rate").get<double>();
    fv.iet_valid = doc.at("iet_valid").get<bool>();
    fv.autocorr_valid = doc.at("autocorr_valid").get<bool>();
    fv.autocorr_zero_variance = doc.at("autocorr_zero_variance").get<bool>();
    return fv;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchemaViolation, std::string("feature vector: ") + ex.what());
  }
}

const std::array<std::string, kFeatureCount>& feature_names() {
  static const auto names = [] {
    std::array<std::string, kFeatureCount> n;
    std::size_t i = 0;
    for (auto kind : netsim::kAllSignalingKinds) n[i++] = "rate_" + std::string(netsim::to_string(kind));
    for (const char* s : {"total_msg_rate", "iet_mean", "iet_var", "iet_cv", "lag1_autocorr", "promote_demote_ratio",
                          "active_ue_count", "max_per_ue_rate", "premium_charge_rate"}) {
      n[i++] = s;
    }
    return n;
  }();
  return names;
}

std::array<double, kFeatureCount> to_array(const FeatureVector& fv) {
  std::array<double, kFeatureCount> a{};
  std::size_t i = 0;
  for (double r : fv.rate_by_kind) a[i++] = r;
  for (double v : {fv.total_msg_rate, fv.iet_mean, fv.iet_var, fv.iet_cv, fv.lag1_autocorr, fv.promote_demote_ratio,
                   fv.active_ue_count, fv.max_per_ue_rate, fv.premium_charge_rate}) {
    a[i++] = v;
  }
  return a;
}

}  // namespace nemesys::features
