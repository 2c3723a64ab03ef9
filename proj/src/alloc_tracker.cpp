#include "chtd/alloc_tracker.hpp"

#include <atomic>

namespace chtd::alloc {

namespace {
std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

void record_alloc(std::size_t bytes) noexcept {
    const std::size_t now = g_current.fetch_add(bytes) + bytes;
    std::size_t prev = g_peak.load();
    while (now > prev && !g_peak.compare_exchange_weak(prev, now)) {
    }
}

void record_free(std::size_t bytes) noexcept { g_current.fetch_sub(bytes); }

std::size_t current_bytes() noexcept { return g_current.load(); }
std::size_t peak_bytes() noexcept { return g_peak.load(); }
void reset_peak() noexcept { g_peak.store(g_current.load()); }

}  // namespace chtd::alloc
