#include "nemesys/dci/aggregate.hpp"

#include <queue>
#include <tuple>

#include "nemesys/common/error.hpp"

namespace nemesys::dci {

std::vector<AttackTrace> aggregate_sources(std::span<const Feed> feeds) {
  std::size_t total = 0;
  for (const auto& feed : feeds) {
    for (std::size_t i = 1; i < feed.records.size(); ++i) {
      if (feed.records[i].ts_ms < feed.records[i - 1].ts_ms) {
        throw Error(ErrorCode::kUnorderedFeed, feed.name);
      }
    }
    total += feed.records.size();
  }

  // Heap entries: (ts, feed name, index in feed, feed position).
  using Head = std::tuple<std::int64_t, const std::string*, std::size_t, std::size_t>;
  const auto later = [](const Head& a, const Head& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (*std::get<1>(a) != *std::get<1>(b)) return *std::get<1>(a) > *std::get<1>(b);
    if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) > std::get<2>(b);
    return std::get<3>(a) > std::get<3>(b);
  };
  std::priority_queue<Head, std::vector<Head>, decltype(later)> heap(later);
  for (std::size_t f = 0; f < feeds.size(); ++f) {
    if (!feeds[f].records.empty()) heap.emplace(feeds[f].records[0].ts_ms, &feeds[f].name, 0, f);
  }

  std::vector<AttackTrace> merged;
  merged.reserve(total);
  while (!heap.empty()) {
    const auto [ts, name, i, f] = heap.top();
    heap.pop();
    merged.push_back(feeds[f].records[i]);
    if (i + 1 < feeds[f].records.size()) heap.emplace(feeds[f].records[i + 1].ts_ms, name, i + 1, f);
  }
  return merged;
}

}  // namespace nemesys::dci
