#include "fbra/event_loop.hpp"

#include <cassert>

namespace fbra {

void EventLoop::at(SimTime when, Callback fn) {
  assert(when >= now_);
  queue_.push({when, next_order_++, std::move(fn)});
}

void EventLoop::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().when <= end) {
    // top() only gives const access; the callback has to be moved out
    Entry entry = std::move(const_cast<Entry&>(queue_.top()));
    queue_.pop();
    now_ = entry.when;
    entry.fn();
  }
  now_ = end;
}

}  // namespace fbra
