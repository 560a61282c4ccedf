#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cantorlab {

/// Keyed, counter-based source of random words. A stream is a pure value:
/// word(i) depends only on (root seed, derivation path, i), so any number
/// of workers can read disjoint or overlapping counters without sharing state.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t root_seed);

    RandomStream derive(std::string_view label, std::uint64_t index) const;

    std::uint64_t root_seed() const { return root_seed_; }
    const std::vector<std::pair<std::string, std::uint64_t>>& path() const { return path_; }
    std::uint64_t key() const { return key_; }

    /// The i-th 64-bit output word (Philox4x32-10 keyed by the path hash).
    std::uint64_t word(std::uint64_t counter) const;
    /// Uniform double in [0, 1) with 53 random bits from word(counter).
    double uniform(std::uint64_t counter) const;

private:
    std::uint64_t root_seed_;
    std::vector<std::pair<std::string, std::uint64_t>> path_;
    std::uint64_t key_;
};

/// Sequential reader over a stream; satisfies UniformRandomBitGenerator.
class StreamEngine {
public:
    using result_type = std::uint64_t;

    explicit StreamEngine(RandomStream stream, std::uint64_t start = 0)
        : stream_(std::move(stream)), counter_(start) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return stream_.word(counter_++); }

    double uniform() { return stream_.uniform(counter_++); }
    std::uint64_t position() const { return counter_; }

private:
    RandomStream stream_;
    std::uint64_t counter_;
};

double to_unit_interval(std::uint64_t w);

/// Philox4x32 with 10 rounds, as in Random123.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

}  // namespace cantorlab
