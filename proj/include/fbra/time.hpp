#pragma once

#include <compare>
#include <cstdint>

namespace fbra {

// All clocks are integer microseconds since simulation start. Keeping time
// integral makes every trace bit-reproducible across runs.
using Duration = std::int64_t;  // microseconds

constexpr Duration kMicrosecond = 1;
constexpr Duration kMillisecond = 1000;
constexpr Duration kSecond = 1'000'000;

struct SimTime {
  std::int64_t us = 0;

  friend constexpr auto operator<=>(const SimTime&, const SimTime&) = default;
  constexpr SimTime operator+(Duration d) const { return SimTime{us + d}; }
  constexpr SimTime operator-(Duration d) const { return SimTime{us - d}; }
  constexpr Duration operator-(SimTime other) const { return us - other.us; }
  constexpr SimTime& operator+=(Duration d) {
    us += d;
    return *this;
  }
};

constexpr double to_seconds(Duration d) {
  return static_cast<double>(d) / static_cast<double>(kSecond);
}

struct BitRate {
  std::int64_t bps = 0;

  friend constexpr auto operator<=>(const BitRate&, const BitRate&) = default;
  constexpr BitRate operator+(BitRate other) const { return BitRate{bps + other.bps}; }
  constexpr BitRate operator-(BitRate other) const { return BitRate{bps - other.bps}; }
};

constexpr BitRate kbps(std::int64_t v) { return BitRate{v * 1000}; }

// Floor applied to every controller-facing media rate.
constexpr BitRate kMinMediaRate = kbps(32);
constexpr BitRate kStartMediaRate = kbps(128);

}  // namespace fbra
