#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fbra/errors.hpp"
#include "fbra/owd.hpp"

using namespace fbra;

namespace {

FeedbackReport clean_report(Duration owd) {
  FeedbackReport r;
  r.owd_sample = owd;
  return r;
}

FeedbackReport congested_report(Duration owd, bool losses, bool discards) {
  FeedbackReport r = clean_report(owd);
  if (losses) r.loss_events.push_back({1, SimTime{10}});
  if (discards) r.discard_events.push_back({2, SimTime{20}});
  return r;
}

OwdTracker tracker_with(const std::vector<Duration>& samples, std::size_t capacity = 20) {
  OwdTracker t(capacity);
  for (auto s : samples) t.admit(clean_report(s));
  return t;
}

// independent nearest-rank oracle over a fully sorted copy
Duration percentile_oracle(std::vector<Duration> samples, double p) {
  std::sort(samples.begin(), samples.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

TEST_CASE("admit keeps clean samples and drops congested ones") {
  OwdTracker t(20);
  t.admit(clean_report(50'000));
  t.admit(clean_report(52'000));
  t.admit(clean_report(51'000));
  CHECK(t.size() == 3);
  t.admit(clean_report(55'000));
  CHECK(t.size() == 4);

  t.admit(congested_report(90'000, true, false));
  CHECK(t.size() == 4);
  t.admit(congested_report(90'000, false, true));
  CHECK(t.size() == 4);
  t.admit(congested_report(90'000, true, true));
  CHECK(t.size() == 4);
}

TEST_CASE("capacity evicts the oldest sample") {
  OwdTracker t(20);
  for (int i = 0; i < 20; ++i) t.admit(clean_report(10'000 + i));
  CHECK(t.size() == 20);
  t.admit(clean_report(99'000));
  CHECK(t.size() == 20);
  // the evicted 10'000 no longer anchors the minimum
  CHECK(t.percentile(0.05) == 10'001);
}

TEST_CASE("percentile frozen examples") {
  const auto t = tracker_with({10'000, 20'000, 30'000, 40'000, 50'000});
  CHECK(t.percentile(0.40) == 20'000);  // ceil(0.4*5) = rank 2
  CHECK(t.percentile(0.80) == 40'000);  // rank 4
  CHECK(tracker_with({42'000}).percentile(0.40) == 42'000);
  CHECK(tracker_with({42'000}).percentile(0.80) == 42'000);
}

TEST_CASE("percentile rejects an empty history") {
  OwdTracker t;
  CHECK_THROWS_AS(t.percentile(0.4), EmptyHistory);
  CHECK_THROWS_AS(t.correlate(10'000), EmptyHistory);
}

TEST_CASE("percentile matches the sort-based oracle on random histories") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<Duration> owd(1'000, 400'000);
  std::uniform_int_distribution<int> size(1, 20);
  const double ps[] = {0.05, 0.25, 0.40, 0.50, 0.80, 0.95, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Duration> samples(static_cast<std::size_t>(size(rng)));
    for (auto& s : samples) s = owd(rng);
    const auto t = tracker_with(samples);
    for (double p : ps) {
      CHECK(t.percentile(p) == percentile_oracle(samples, p));
    }
  }
}

TEST_CASE("percentile is monotone in p and bounded by the extremes") {
  std::mt19937 rng(4);
  std::uniform_int_distribution<Duration> owd(1'000, 400'000);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Duration> samples(1 + rng() % 20);
    for (auto& s : samples) s = owd(rng);
    const auto t = tracker_with(samples);
    Duration prev = t.percentile(0.01);
    for (double p = 0.1; p <= 1.0; p += 0.1) {
      const Duration cur = t.percentile(p);
      CHECK(cur >= prev);
      prev = cur;
    }
    CHECK(t.percentile(0.01) >= *std::min_element(samples.begin(), samples.end()));
    CHECK(t.percentile(1.0) == *std::max_element(samples.begin(), samples.end()));
  }
}

TEST_CASE("correlate frozen examples") {
  const auto t = tracker_with({10'000, 20'000, 30'000, 40'000, 50'000});
  const auto c = t.correlate(30'000);
  CHECK(c.corr_low == doctest::Approx(1.5));
  CHECK(c.corr_high == doctest::Approx(0.75));
  CHECK(c.p40 == 20'000);
  CHECK(c.p80 == 40'000);

  CHECK(t.correlate(20'000).corr_low == doctest::Approx(1.0));
  // 100 ms against an 80th percentile of 40 ms crosses the undershoot bar
  CHECK(t.correlate(100'000).corr_high == doctest::Approx(2.5));
}

TEST_CASE("correlations are scale covariant") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<Duration> owd(1'000, 100'000);
  for (const Duration k : {2, 10, 1000}) {
    std::vector<Duration> samples(12);
    for (auto& s : samples) s = owd(rng);
    const Duration current = owd(rng);

    std::vector<Duration> scaled(samples);
    for (auto& s : scaled) s *= k;

    const auto base = tracker_with(samples).correlate(current);
    const auto big = tracker_with(scaled).correlate(current * k);
    CHECK(big.corr_low == doctest::Approx(base.corr_low));
    CHECK(big.corr_high == doctest::Approx(base.corr_high));
  }
}

TEST_CASE("congested reports never change later correlations") {
  std::vector<Duration> samples{40'000, 41'000, 45'000, 47'000, 52'000};
  auto plain = tracker_with(samples);
  auto noisy = tracker_with(samples);
  for (int i = 0; i < 50; ++i) {
    noisy.admit(congested_report(300'000 + i * 1000, i % 2 == 0, i % 2 != 0));
  }
  CHECK(plain.correlate(60'000).corr_low == noisy.correlate(60'000).corr_low);
  CHECK(plain.correlate(60'000).corr_high == noisy.correlate(60'000).corr_high);
}

TEST_CASE("neutral bootstrap on empty or degenerate histories") {
  OwdTracker t;
  auto c = t.correlate_or_neutral(75'000);
  CHECK(c.corr_low == 1.0);
  CHECK(c.corr_high == 1.0);

  t.admit(clean_report(0));
  CHECK_THROWS_AS(t.correlate(10'000), ZeroPercentile);
  c = t.correlate_or_neutral(10'000);
  CHECK(c.corr_low == 1.0);
  CHECK(c.corr_high == 1.0);
}
