#pragma once

#include <stdexcept>
#include <string>

namespace fbra {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BlockLengthOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonConsecutiveSequence : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IntervalOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyHistory : std::logic_error {
  using std::logic_error::logic_error;
};

struct ZeroPercentile : std::logic_error {
  using std::logic_error::logic_error;
};

struct UnknownFlow : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoTcpFlows : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fbra
