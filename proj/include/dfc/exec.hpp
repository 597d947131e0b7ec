// Execution-mode switch: every data-parallel kernel has a serial reference
// implementation selected at runtime, kept for testing and benchmarking.
#pragma once

#include <atomic>

namespace dfc {

inline std::atomic<bool>& parallel_flag() {
  static std::atomic<bool> flag{true};
  return flag;
}

inline bool parallel_enabled() { return parallel_flag().load(std::memory_order_relaxed); }
inline void set_parallel(bool on) { parallel_flag().store(on, std::memory_order_relaxed); }

struct SerialScope {
  bool saved;
  SerialScope() : saved(parallel_enabled()) { set_parallel(false); }
  ~SerialScope() { set_parallel(saved); }
};

}  // namespace dfc
