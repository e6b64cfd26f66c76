#include "mfrnn/diagnostics.hpp"

#include <atomic>

namespace mfrnn {

namespace {
std::atomic<std::size_t> g_atanh{0};
std::atomic<std::size_t> g_sigma{0};
}  // namespace

void note_atanh_clamp() { g_atanh.fetch_add(1, std::memory_order_relaxed); }
std::size_t atanh_clamp_count() { return g_atanh.load(std::memory_order_relaxed); }
void note_sigma_clamp() { g_sigma.fetch_add(1, std::memory_order_relaxed); }
std::size_t sigma_clamp_count() { return g_sigma.load(std::memory_order_relaxed); }

void reset_warning_counts() {
  g_atanh.store(0);
  g_sigma.store(0);
}

}  // namespace mfrnn
