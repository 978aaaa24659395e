#pragma once

#include <cstdint>
#include <optional>
#include <utility>

namespace fusionpose {

// Access accounting for ground-truth data. Every read of a guarded value
// increments `reads`; reads while a GtLock is alive also increment
// `violations` and, in builds without NDEBUG, throw ContractError.
struct GtAccessCounters {
  std::uint64_t reads = 0;
  std::uint64_t violations = 0;
};

GtAccessCounters gt_access_counters();
void reset_gt_access_counters();
bool gt_locked();

// Marks a region (training) where ground truth must not be read. Nests.
class GtLock {
 public:
  GtLock();
  ~GtLock();
  GtLock(const GtLock&) = delete;
  GtLock& operator=(const GtLock&) = delete;
};

namespace detail {
void record_gt_read();
}

template <typename T>
class Guarded {
 public:
  Guarded() = default;
  explicit Guarded(T value) : value_(std::move(value)) {}

  bool present() const { return value_.has_value(); }
  const T& get() const {
    detail::record_gt_read();
    return *value_;
  }
  void set(T value) { value_ = std::move(value); }
  void reset() { value_.reset(); }

  // Equality is structural and does not count as a read.
  bool operator==(const Guarded& other) const { return value_ == other.value_; }

 private:
  std::optional<T> value_;
};

}  // namespace fusionpose
