#pragma once

#include <cstdint>
#include <limits>
#include <optional>

namespace teraliz::arith {

// Two's-complement wrapping Int32 semantics, shared by the interpreter, the
// symbolic evaluator, and the generators. Division and modulo truncate toward
// zero; INT_MIN / -1 wraps to INT_MIN and INT_MIN % -1 is 0.

constexpr int32_t kMin = std::numeric_limits<int32_t>::min();
constexpr int32_t kMax = std::numeric_limits<int32_t>::max();

inline int32_t wrap(int64_t v) { return static_cast<int32_t>(static_cast<uint64_t>(v)); }

inline int32_t add_wrap(int32_t a, int32_t b) { return wrap(int64_t{a} + b); }
inline int32_t sub_wrap(int32_t a, int32_t b) { return wrap(int64_t{a} - b); }
inline int32_t mul_wrap(int32_t a, int32_t b) { return wrap(int64_t{a} * b); }

/// nullopt on division by zero.
inline std::optional<int32_t> div_trunc(int32_t a, int32_t b) {
    if (b == 0) return std::nullopt;
    if (a == kMin && b == -1) return kMin;
    return a / b;
}

/// nullopt on modulo by zero.
inline std::optional<int32_t> mod_trunc(int32_t a, int32_t b) {
    if (b == 0) return std::nullopt;
    if (a == kMin && b == -1) return 0;
    return a % b;
}

/// a + delta clamped to the Int32 range instead of wrapping; bound
/// adjustment for strict-to-inclusive conversion saturates at type extremes.
inline int32_t add_sat(int32_t a, int32_t delta) {
    int64_t v = int64_t{a} + delta;
    if (v < kMin) return kMin;
    if (v > kMax) return kMax;
    return static_cast<int32_t>(v);
}

}  // namespace teraliz::arith
