#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radar {

using TokenId = std::int32_t;

/// Token ids over a finite vocabulary. Operations that need N >= 1 check it
/// at their boundary; contexts may be empty.
using TokenSequence = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite stand-in for -infinity when a log-probability feeds a loss.
inline constexpr double kLogProbFloor = -1e9;

}  // namespace radar
