#include "nemesys/common/rng.hpp"

#include <cmath>
#include <numbers>

namespace nemesys {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// FNV-1a
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : key_(mix64(mix64(seed + kGolden) ^ hash_label(label))) {}

RngStream RngStream::from_key(std::uint64_t key, std::uint64_t counter) {
  RngStream s;
  s.key_ = key;
  s.counter_ = counter;
  return s;
}

RngStream RngStream::split(std::string_view label) const {
  return from_key(mix64(key_ ^ mix64(hash_label(label) + kGolden)));
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

double RngStream::exponential(double rate) { return -std::log(uniform()) / rate; }

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace nemesys
