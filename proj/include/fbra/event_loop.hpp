#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "fbra/time.hpp"

namespace fbra {

// Single-threaded discrete-event loop. Ties at the same timestamp execute in
// insertion order, which keeps whole runs bit-reproducible.
class EventLoop {
 public:
  using Callback = std::function<void()>;

  SimTime now() const { return now_; }

  void at(SimTime when, Callback fn);
  void after(Duration delay, Callback fn) { at(now_ + delay, std::move(fn)); }

  // Executes every event scheduled at or before `end`; the clock finishes at
  // `end` even if the queue drains early.
  void run_until(SimTime end);

 private:
  struct Entry {
    SimTime when;
    std::uint64_t order;
    Callback fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.when != b.when) return b.when < a.when;
      return b.order < a.order;
    }
  };

  SimTime now_;
  std::uint64_t next_order_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
};

}  // namespace fbra
