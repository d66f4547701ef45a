#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace invpred {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based random stream. The output sequence is a pure function of
// (seed, stream id); substream(i) derives a new stream id from the current one
// and i, so stream(seed).substream(i) depends only on (seed, i).
//
// Satisfies UniformRandomBitGenerator, so std distributions can draw from it.
// Values are single-owner; share seeds, never stream objects, across threads.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed, std::uint64_t streamId = 0);

    RandomStream substream(std::uint64_t index) const;

    result_type operator()();
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return streamId_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t streamId_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; used to derive stream ids and independent seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace invpred
