#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "nemesys/detect/classify.hpp"

namespace nemesys::service {

/// Alert store plus live fan-out. Alerts get service-wide ids 1, 2, ... in
/// publication order. Subscribers hold a cursor (the last id they have seen)
/// and pull everything after it, so each receives every alert exactly once
/// and in order without per-subscriber queues.
class AlertHub {
 public:
  explicit AlertHub(std::size_t replay = 100) : replay_(replay) {}

  /// Stores the alert under the next id and wakes subscribers.
  detect::Alert publish(detect::Alert alert);

  /// Marks the alert acknowledged. Idempotent; false for an unknown id.
  bool ack(std::uint64_t alert_id);

  std::vector<detect::Alert> all() const;
  std::optional<detect::Alert> get(std::uint64_t alert_id) const;

  /// Cursor for a new subscriber: it will receive the last `replay` alerts
  /// and everything after them.
  std::uint64_t join_cursor() const;

  /// Alerts with id > cursor, waiting up to `wait` for one to appear.
  /// Returns early with nothing once closed.
  std::vector<detect::Alert> wait_after(std::uint64_t cursor, std::chrono::milliseconds wait) const;

  void close();
  bool closed() const;

  void add_subscriber();
  void remove_subscriber();
  std::size_t subscribers() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<detect::Alert> alerts_;  // alerts_[id - 1]
  std::size_t replay_;
  std::size_t subscribers_ = 0;
  bool closed_ = false;
};

}  // namespace nemesys::service
