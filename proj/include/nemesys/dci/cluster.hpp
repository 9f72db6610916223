#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nemesys/dci/trace.hpp"

namespace nemesys::dci {

struct KMeansResult {
  std::vector<std::size_t> assignments;  // cluster per input vector
  std::vector<std::vector<double>> centroids;
  std::size_t iterations = 0;      // Lloyd rounds run
  std::vector<double> objective;   // within-cluster sum of squares after each assignment
};

/// k-means with farthest-point seeding: the first centre is drawn from the
/// seeded stream, each further one is the point farthest from its nearest
/// centre (lowest index on ties). Lloyd rounds run until assignments stop
/// changing or for at most `max_iterations`. An emptied cluster keeps its
/// previous centroid. Throws BadK and DimensionMismatch.
KMeansResult cluster_traces(std::span<const std::vector<double>> vectors, std::size_t k, std::uint64_t seed,
                            std::size_t max_iterations = 100);

/// Numeric view of a trace used when clustering the store: event kind one-hot,
/// the four address octets, port, ttl and window (each scaled to [0, 1]) and a
/// payload flag. Missing fields contribute zeros.
std::vector<double> trace_vector(const AttackTrace& trace);

}  // namespace nemesys::dci
