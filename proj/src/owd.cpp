#include "fbra/owd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbra/errors.hpp"

namespace fbra {

OwdTracker::OwdTracker(std::size_t capacity) : capacity_(capacity) {}

void OwdTracker::admit(const FeedbackReport& report) {
  if (!report.clean()) return;
  samples_.push_back(report.owd_sample);
  while (samples_.size() > capacity_) samples_.pop_front();
}

Duration OwdTracker::percentile(double p) const {
  if (samples_.empty()) throw EmptyHistory("OWD history is empty");
  std::vector<Duration> sorted(samples_.begin(), samples_.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));  // 1-based
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

OwdCorrelation OwdTracker::correlate(Duration current_owd) const {
  OwdCorrelation c;
  c.p40 = percentile(0.40);
  c.p80 = percentile(0.80);
  if (c.p40 <= 0 || c.p80 <= 0) throw ZeroPercentile("zero-delay OWD history");
  c.corr_low = static_cast<double>(current_owd) / static_cast<double>(c.p40);
  c.corr_high = static_cast<double>(current_owd) / static_cast<double>(c.p80);
  return c;
}

OwdCorrelation OwdTracker::correlate_or_neutral(Duration current_owd) const {
  if (samples_.empty()) return OwdCorrelation{};
  const Duration p40 = percentile(0.40);
  const Duration p80 = percentile(0.80);
  if (p40 <= 0 || p80 <= 0) return OwdCorrelation{};
  return correlate(current_owd);
}

}  // namespace fbra
