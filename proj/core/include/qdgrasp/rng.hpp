#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace qdgrasp {

/// Portable seeded random source (xoshiro256**) with labeled sub-streams.
///
/// Distributions are implemented here rather than through <random> so that a given
/// (seed, label, call sequence) produces identical draws on every standard library.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label);

    /// Independent stream whose state depends only on this stream's seed, label and `sub_label`.
    RngStream derive(std::string_view sub_label) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01();
    double uniform(double lo, double hi);
    /// Standard normal draw (Marsaglia polar method).
    double normal();
    /// Uniform integer in [0, n), unbiased. n must be positive.
    std::size_t index(std::size_t n);
    bool bernoulli(double p);

    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }

private:
    std::uint64_t seed_;
    std::string label_;
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t fnv1a64(std::string_view text);

} // namespace qdgrasp
