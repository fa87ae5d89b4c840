#include "embias/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace embias {

namespace {
std::mutex g_mutex;
std::atomic<bool> g_enabled{true};
}  // namespace

void warn(std::string_view message) {
  if (!g_enabled.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled.store(enabled, std::memory_order_relaxed); }

}  // namespace embias
