#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cellpic {

/// Philox4x32-10 block function (Salmon et al., Random123).
/// Maps a 128-bit counter and 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// What a stream is used for; part of the stream identity so that
/// initialization and collision draws never share random numbers.
enum class StreamPurpose : std::uint32_t {
    init = 1,
    collision = 2,
    bench = 3,
    test = 255,
};

/// Counter-based random stream identified by (seed, purpose, a, b).
///
/// Streams are cheap to create and carry no shared state, so any cell can
/// rebuild its stream on any thread and draw the same sequence. The
/// generator satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t a, std::uint32_t b,
               std::uint32_t sub = 0) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Standard normal variate (Box-Muller, second value cached).
    double normal() noexcept;

    std::uint64_t blocks_consumed() const noexcept { return block_; }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint32_t purpose_word_;
    std::uint32_t a_;
    std::uint32_t b_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cellpic
