#include "nemesys/service/alert_hub.hpp"

namespace nemesys::service {

detect::Alert AlertHub::publish(detect::Alert alert) {
  {
    std::lock_guard lock(mu_);
    alert.alert_id = alerts_.size() + 1;
    alerts_.push_back(alert);
  }
  cv_.notify_all();
  return alert;
}

bool AlertHub::ack(std::uint64_t alert_id) {
  std::lock_guard lock(mu_);
  if (alert_id == 0 || alert_id > alerts_.size()) return false;
  alerts_[alert_id - 1].acked = true;
  return true;
}

std::vector<detect::Alert> AlertHub::all() const {
  std::lock_guard lock(mu_);
  return alerts_;
}

std::optional<detect::Alert> AlertHub::get(std::uint64_t alert_id) const {
  std::lock_guard lock(mu_);
  if (alert_id == 0 || alert_id > alerts_.size()) return std::nullopt;
  return alerts_[alert_id - 1];
}

std::uint64_t AlertHub::join_cursor() const {
  std::lock_guard lock(mu_);
  return alerts_.size() > replay_ ? alerts_.size() - replay_ : 0;
}

std::vector<detect::Alert> AlertHub::wait_after(std::uint64_t cursor, std::chrono::milliseconds wait) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, wait, [&] { return closed_ || alerts_.size() > cursor; });
  if (closed_ || alerts_.size() <= cursor) return {};
  return {alerts_.begin() + static_cast<std::ptrdiff_t>(cursor), alerts_.end()};
}

void AlertHub::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool AlertHub::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void AlertHub::add_subscriber() {
  std::lock_guard lock(mu_);
  ++subscribers_;
}

void AlertHub::remove_subscriber() {
  std::lock_guard lock(mu_);
  --subscribers_;
}

std::size_t AlertHub::subscribers() const {
  std::lock_guard lock(mu_);
  return subscribers_;
}

}  // namespace nemesys::service
