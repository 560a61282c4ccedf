#pragma once

#include <cstdint>

#include "cantorlab/random_stream.hpp"
#include "cantorlab/rational.hpp"

namespace cantorlab::testing {

inline std::uint64_t below(StreamEngine& eng, std::uint64_t n) { return eng() % n; }

/// p/q with 1 <= q <= max_den and 0 <= p < q (not necessarily reduced).
inline Rational random_unit_rational(StreamEngine& eng, std::uint64_t max_den) {
    auto q = static_cast<std::int64_t>(1 + below(eng, max_den));
    auto p = static_cast<std::int64_t>(below(eng, static_cast<std::uint64_t>(q)));
    return Rational(p, q);
}

/// Signed rational with numerator and denominator below 2^20.
inline Rational random_rational(StreamEngine& eng) {
    auto q = static_cast<std::int64_t>(1 + below(eng, 1u << 20));
    auto p = static_cast<std::int64_t>(below(eng, 1u << 21)) - (1 << 20);
    return Rational(p, q);
}

}  // namespace cantorlab::testing
