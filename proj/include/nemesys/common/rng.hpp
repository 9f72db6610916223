#pragma once

#include <cstdint>
#include <string_view>

namespace nemesys {

/// Counter-based random stream. Each draw is a pure function of
/// (key, counter), so a stream can be re-created at any position and two
/// streams derived from different labels never share state. All samplers
/// are written out here rather than taken from <random>, whose
/// distributions differ between standard library implementations.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::string_view label);

  static RngStream from_key(std::uint64_t key, std::uint64_t counter = 0);

  /// Child stream keyed by this stream's key and `label`. Does not consume
  /// draws from the parent.
  RngStream split(std::string_view label) const;

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double exponential(double rate);
  double normal();

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);

}  // namespace nemesys
