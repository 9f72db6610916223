#pragma once

#include <span>
#include <string>
#include <vector>

#include "nemesys/dci/trace.hpp"

namespace nemesys::dci {

struct Feed {
  std::string name;
  std::vector<AttackTrace> records;  // non-decreasing ts_ms
};

/// k-way merge by ts_ms. Ties go to the lexicographically smaller feed
/// name, then to the earlier record within a feed. Throws UnorderedFeed
/// naming the first feed that is out of order.
std::vector<AttackTrace> aggregate_sources(std::span<const Feed> feeds);

}  // namespace nemesys::dci
