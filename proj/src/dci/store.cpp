#include "nemesys/dci/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <set>

#include "nemesys/common/error.hpp"
#include "nemesys/common/io.hpp"

namespace nemesys::dci {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad_filter(const std::string& msg) { throw Error(ErrorCode::kMalformedFilter, msg); }
[[noreturn]] void storage(const std::string& msg) { throw Error(ErrorCode::kStorageFailure, msg); }

template <typename T>
T filter_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) bad_filter("bad value for " + key + ": '" + value + "'");
  return out;
}

template <typename T>
bool eq(const std::optional<T>& want, const std::optional<T>& have) {
  return !want || (have && *have == *want);
}

ordered_json annotation_json(const EnrichedTrace& t) {
  ordered_json doc;
  doc["op"] = "annotate";
  doc["trace_id"] = t.base.trace_id;
  if (t.geo) doc["geo"] = *t.geo;
  if (t.asn) doc["asn"] = *t.asn;
  if (t.rdns) doc["rdns"] = *t.rdns;
  if (t.os_guess) doc["os_guess"] = *t.os_guess;
  if (t.cluster_id) doc["cluster_id"] = *t.cluster_id;
  return doc;
}

}  // namespace

bool Filter::matches(const EnrichedTrace& t) const {
  const auto& b = t.base;
  if (source && b.source.str() != *source) return false;
  if (event_kind && b.event_kind != *event_kind) return false;
  if (ip && (!b.remote || b.remote->ip != *ip)) return false;
  if (port && (!b.remote || b.remote->port != *port)) return false;
  if (!eq(payload_hash, b.payload_hash) || !eq(number, b.number)) return false;
  if (!eq(geo, t.geo) || !eq(asn, t.asn) || !eq(rdns, t.rdns) || !eq(os_guess, t.os_guess)) return false;
  if (!eq(cluster_id, t.cluster_id)) return false;
  if (since_ms && b.ts_ms < *since_ms) return false;
  if (until_ms && b.ts_ms >= *until_ms) return false;
  return true;
}

Filter filter_from_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  Filter f;
  std::set<std::string> seen;
  for (const auto& [key, value] : pairs) {
    if (!seen.insert(key).second) bad_filter("key '" + key + "' given twice");
    if (key == "source") {
      f.source = value;
    } else if (key == "event_kind") {
      f.event_kind = parse_trace_kind(value);
      if (!f.event_kind) bad_filter("unknown event_kind '" + value + "'");
    } else if (key == "ip") {
      f.ip = parse_ipv4(value);
      if (!f.ip) bad_filter("bad ip '" + value + "'");
    } else if (key == "port") {
      f.port = filter_number<std::uint16_t>(key, value);
    } else if (key == "payload_hash") {
      f.payload_hash = value;
    } else if (key == "number") {
      f.number = value;
    } else if (key == "geo") {
      f.geo = value;
    } else if (key == "asn") {
      f.asn = filter_number<std::uint32_t>(key, value);
    } else if (key == "rdns") {
      f.rdns = value;
    } else if (key == "os_guess") {
      f.os_guess = value;
    } else if (key == "cluster_id") {
      f.cluster_id = filter_number<std::uint32_t>(key, value);
    } else if (key == "since") {
      f.since_ms = filter_number<std::int64_t>(key, value);
    } else if (key == "until") {
      f.until_ms = filter_number<std::int64_t>(key, value);
    } else if (key == "limit") {
      f.limit = filter_number<std::size_t>(key, value);
      if (*f.limit == 0) bad_filter("limit must be at least 1");
    } else if (key == "after_id") {
      f.after_id = filter_number<std::uint64_t>(key, value);
    } else {
      bad_filter("unknown filter key '" + key + "'");
    }
  }
  if (f.since_ms && f.until_ms && *f.since_ms > *f.until_ms) bad_filter("since is after until");
  return f;
}

Filter parse_filter(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t i = 0;
  const auto sep = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '&' || c == ','; };
  while (i < text.size()) {
    while (i < text.size() && sep(text[i])) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !sep(text[j])) ++j;
    const std::string_view clause = text.substr(i, j - i);
    const auto eq_at = clause.find('=');
    if (eq_at == std::string_view::npos || eq_at == 0) bad_filter("clause '" + std::string(clause) + "' is not key=value");
    pairs.emplace_back(std::string(clause.substr(0, eq_at)), std::string(clause.substr(eq_at + 1)));
    i = j;
  }
  return filter_from_pairs(pairs);
}

TraceStore::TraceStore() = default;

TraceStore::TraceStore(const std::filesystem::path& dir, bool sync) : sync_(sync) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) storage("cannot create " + dir.string() + ": " + ec.message());
  log_path_ = dir / "traces.log";
  replay_log();
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) storage("cannot open " + log_path_.string() + ": " + std::strerror(errno));
}

TraceStore::~TraceStore() {
  if (fd_ >= 0) ::close(fd_);
}

void TraceStore::replay_log() {
  if (!std::filesystem::exists(log_path_)) return;
  std::string text = read_text_file(log_path_);
  // A final line without its newline was never acknowledged; drop it.
  const auto last_nl = text.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (keep != text.size()) {
    text.resize(keep);
    std::filesystem::resize_file(log_path_, keep);
  }
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      json doc = json::parse(line);
      const std::string op = doc.at("op").get<std::string>();
      doc.erase("op");
      if (op == "ingest") {
        EnrichedTrace t;
        t.base = trace_from_json(doc);
        if (t.base.trace_id != traces_.size() + 1) storage("non-consecutive trace_id");
        apply_ingest(std::move(t));
      } else if (op == "annotate") {
        const auto id = doc.at("trace_id").get<std::uint64_t>();
        if (id == 0 || id > traces_.size()) storage("annotation for unknown trace_id");
        doc.erase("trace_id");
        json full = to_json(traces_[id - 1].base);
        full.update(doc);
        traces_[id - 1] = enriched_from_json(full);
      } else {
        storage("unknown op '" + op + "'");
      }
    } catch (const json::exception& ex) {
      storage(log_path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      storage(log_path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

void TraceStore::append_line(const std::string& line) {
  if (fd_ < 0) return;
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      storage("write to " + log_path_.string() + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) storage("fdatasync failed: " + std::string(std::strerror(errno)));
}

void TraceStore::apply_ingest(EnrichedTrace t) {
  const auto id = t.base.trace_id;
  by_source_[t.base.source.str()].push_back(id);
  by_kind_[static_cast<std::size_t>(t.base.event_kind)].push_back(id);
  if (t.base.remote) by_ip_[t.base.remote->ip].push_back(id);
  if (t.base.payload_hash) by_hash_[*t.base.payload_hash].push_back(id);
  traces_.push_back(std::move(t));
}

std::uint64_t TraceStore::ingest(AttackTrace record) {
  record.validate();
  std::unique_lock lock(mu_);
  record.trace_id = traces_.size() + 1;
  ordered_json doc;
  doc["op"] = "ingest";
  doc.update(to_json(record));
  append_line(doc.dump());
  apply_ingest(EnrichedTrace{std::move(record)});
  return traces_.size();
}

void TraceStore::annotate(const EnrichedTrace& trace) {
  std::unique_lock lock(mu_);
  const auto id = trace.base.trace_id;
  if (id == 0 || id > traces_.size()) throw Error(ErrorCode::kSchemaViolation, "unknown trace_id " + std::to_string(id));
  auto& stored = traces_[id - 1];
  if (!(stored.base == trace.base)) {
    throw Error(ErrorCode::kSchemaViolation, "base of trace " + std::to_string(id) + " differs from the stored record");
  }
  if (stored == trace) return;
  append_line(annotation_json(trace).dump());
  stored = trace;
}

std::vector<EnrichedTrace> TraceStore::query(const Filter& f) const {
  std::shared_lock lock(mu_);
  static const std::vector<std::uint64_t> kNone;
  const std::vector<std::uint64_t>* postings = nullptr;
  const auto consider = [&](const std::vector<std::uint64_t>& p) {
    if (!postings || p.size() < postings->size()) postings = &p;
  };
  const auto lookup = [&](const auto& index, const auto& key) {
    const auto it = index.find(key);
    consider(it == index.end() ? kNone : it->second);
  };
  if (f.source) lookup(by_source_, *f.source);
  if (f.event_kind) consider(by_kind_[static_cast<std::size_t>(*f.event_kind)]);
  if (f.ip) lookup(by_ip_, *f.ip);
  if (f.payload_hash) lookup(by_hash_, *f.payload_hash);

  std::vector<EnrichedTrace> out;
  const auto take = [&](std::uint64_t id) {
    const auto& t = traces_[id - 1];
    if (f.matches(t)) out.push_back(t);
    return !f.limit || out.size() < *f.limit;
  };
  if (f.limit && *f.limit == 0) return out;
  if (postings) {
    for (auto it = std::upper_bound(postings->begin(), postings->end(), f.after_id); it != postings->end(); ++it) {
      if (!take(*it)) break;
    }
  } else {
    for (std::uint64_t id = f.after_id + 1; id <= traces_.size(); ++id) {
      if (!take(id)) break;
    }
  }
  return out;
}

std::optional<EnrichedTrace> TraceStore::get(std::uint64_t trace_id) const {
  std::shared_lock lock(mu_);
  if (trace_id == 0 || trace_id > traces_.size()) return std::nullopt;
  return traces_[trace_id - 1];
}

std::vector<EnrichedTrace> TraceStore::all() const {
  std::shared_lock lock(mu_);
  return traces_;
}

std::size_t TraceStore::size() const {
  std::shared_lock lock(mu_);
  return traces_.size();
}

}  // namespace nemesys::dci
