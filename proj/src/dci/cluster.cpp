#include "nemesys/dci/cluster.hpp"

#include <limits>

#include "nemesys/common/error.hpp"
#include "nemesys/common/rng.hpp"

namespace nemesys::dci {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// Nearest centroid, lowest index on ties.
std::pair<std::size_t, double> nearest(const std::vector<double>& v, const std::vector<std::vector<double>>& cs) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const double d = sq_dist(v, cs[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

}  // namespace

KMeansResult cluster_traces(std::span<const std::vector<double>> vectors, std::size_t k, std::uint64_t seed,
                            std::size_t max_iterations) {
  const std::size_t n = vectors.size();
  if (k < 1 || k > n) throw Error(ErrorCode::kBadK, "k=" + std::to_string(k) + " with " + std::to_string(n) + " vectors");
  const std::size_t dim = vectors[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "vector " + std::to_string(i) + " has " +
                                                     std::to_string(vectors[i].size()) + " components, expected " +
                                                     std::to_string(dim));
    }
  }

  KMeansResult r;
  RngStream rng(seed, "dci/kmeans");
  r.centroids.push_back(vectors[rng.below(n)]);
  std::vector<double> gap(n);
  for (std::size_t i = 0; i < n; ++i) gap[i] = sq_dist(vectors[i], r.centroids[0]);
  while (r.centroids.size() < k) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (gap[i] > gap[far]) far = i;
    }
    r.centroids.push_back(vectors[far]);
    for (std::size_t i = 0; i < n; ++i) gap[i] = std::min(gap[i], sq_dist(vectors[i], r.centroids.back()));
  }

  r.assignments.assign(n, k);  // k = not yet assigned
  while (r.iterations < max_iterations) {
    bool changed = false;
    double wcss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [c, d] = nearest(vectors[i], r.centroids);
      changed |= r.assignments[i] != c;
      r.assignments[i] = c;
      wcss += d;
    }
    r.objective.push_back(wcss);
    ++r.iterations;
    if (!changed) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[r.assignments[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += vectors[i][j];
      ++counts[r.assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) r.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }
  return r;
}

std::vector<double> trace_vector(const AttackTrace& t) {
  std::vector<double> v(kTraceKindCount + 8, 0.0);
  v[static_cast<std::size_t>(t.event_kind)] = 1.0;
  std::size_t at = kTraceKindCount;
  if (t.remote) {
    for (int octet = 3; octet >= 0; --octet) v[at++] = static_cast<double>((t.remote->ip >> (8 * octet)) & 0xff) / 255.0;
    v[at++] = t.remote->port / 65535.0;
  } else {
    at += 5;
  }
  if (t.tcp_meta) {
    v[at] = t.tcp_meta->ttl / 255.0;
    v[at + 1] = t.tcp_meta->win / 65535.0;
  }
  v[at + 2] = t.payload_hash ? 1.0 : 0.0;
  return v;
}

}  // namespace nemesys::dci
