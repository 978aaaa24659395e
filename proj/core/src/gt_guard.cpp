#include "fusionpose/gt_guard.hpp"

#include "fusionpose/errors.hpp"

#include <atomic>

namespace fusionpose {
namespace {

std::atomic<std::uint64_t> g_reads{0};
std::atomic<std::uint64_t> g_violations{0};
std::atomic<int> g_locks{0};

}  // namespace

GtAccessCounters gt_access_counters() { return {g_reads.load(), g_violations.load()}; }

void reset_gt_access_counters() {
  g_reads = 0;
  g_violations = 0;
}

bool gt_locked() { return g_locks.load() > 0; }

GtLock::GtLock() { ++g_locks; }
GtLock::~GtLock() { --g_locks; }

namespace detail {

void record_gt_read() {
  ++g_reads;
  if (g_locks.load() > 0) {
    ++g_violations;
#ifndef NDEBUG
    throw ContractError("ground-truth 3D pose read inside a training region");
#endif
  }
}

}  // namespace detail
}  // namespace fusionpose
