#pragma once

#include <cmath>
#include <cstdint>

namespace rtbq {

// Ledger amounts are integer micro-currency units. Floating point enters only
// at read time, so aggregates replay bit-exactly.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerUnit = 1'000'000;

constexpr double to_units(Micros m) {
  return static_cast<double>(m) / static_cast<double>(kMicrosPerUnit);
}

inline Micros micros_from_units(double units) {
  return static_cast<Micros>(std::llround(units * static_cast<double>(kMicrosPerUnit)));
}

}  // namespace rtbq
