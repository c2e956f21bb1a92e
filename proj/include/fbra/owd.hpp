#pragma once

#include <cstddef>
#include <deque>

#include "fbra/packets.hpp"
#include "fbra/time.hpp"

namespace fbra {

struct OwdCorrelation {
  double corr_low = 1.0;   // current / 40th percentile
  double corr_high = 1.0;  // current / 80th percentile
  Duration p40 = 0;
  Duration p80 = 0;
};

// History of uncongested one-way-delay samples. Only reports carrying no loss
// and no discard events contribute; congested intervals would drag the
// watermarks toward the congested delay and blind the thresholds.
class OwdTracker {
 public:
  explicit OwdTracker(std::size_t capacity = 20);

  // Admits report.owd_sample when the report is clean; otherwise a no-op.
  void admit(const FeedbackReport& report);

  // Nearest-rank percentile over a sorted copy: 1-based rank ceil(p * n).
  // Throws EmptyHistory when no samples were admitted yet.
  Duration percentile(double p) const;

  // Throws EmptyHistory / ZeroPercentile on degenerate histories.
  OwdCorrelation correlate(Duration current_owd) const;

  // Bootstrap variant: an empty or zero-delay history yields the neutral
  // correlation 1.0 so session start neither undershoots nor blocks probing.
  OwdCorrelation correlate_or_neutral(Duration current_owd) const;

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Duration> samples_;  // oldest first
};

}  // namespace fbra
