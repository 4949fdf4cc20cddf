#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bandset {

struct KeyValue {
  std::string_view key;
  std::uint64_t value;  // only the low r bits may be set
};

inline constexpr std::size_t kMaxBlockLen = 1024;

// Table positions for m keys at slack epsilon: ceil(m / (1 - epsilon)),
// never below 1 so that empty structures still have a valid start range.
inline std::uint64_t positions_for(std::size_t m, double epsilon) {
  const double exact = static_cast<double>(m) / (1.0 - epsilon);
  // absorb rounding noise such as 95 / 0.95 = 100.00000000000001
  auto n = static_cast<std::uint64_t>(std::ceil(exact - 1e-9 * exact));
  return n == 0 ? 1 : n;
}

}  // namespace bandset
