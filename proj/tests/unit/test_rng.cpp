#include "cellpic/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

using namespace cellpic;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("a stream is a pure function of its identity") {
    CounterRng a(42, StreamPurpose::collision, 7, 9);
    CounterRng b(42, StreamPurpose::collision, 7, 9);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("different identities give different streams") {
    std::set<std::uint64_t> first;
    first.insert(CounterRng(1, StreamPurpose::init, 0, 0)());
    first.insert(CounterRng(2, StreamPurpose::init, 0, 0)());
    first.insert(CounterRng(1, StreamPurpose::collision, 0, 0)());
    first.insert(CounterRng(1, StreamPurpose::init, 1, 0)());
    first.insert(CounterRng(1, StreamPurpose::init, 0, 1)());
    first.insert(CounterRng(1, StreamPurpose::init, 0, 0, 1)());
    CHECK(first.size() == 6);
}

TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
    CounterRng rng(3, StreamPurpose::test, 0, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // 5 sigma bands: sd(mean) = sqrt(1/12/n).
    CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal draws have zero mean and unit variance") {
    CounterRng rng(5, StreamPurpose::test, 1, 2);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.normal();
        REQUIRE(std::isfinite(g));
        sum += g;
        sum2 += g * g;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("two 64-bit draws consume one block") {
    CounterRng rng(9, StreamPurpose::test, 0, 0);
    CHECK(rng.blocks_consumed() == 0);
    rng();
    CHECK(rng.blocks_consumed() == 1);
    rng();
    CHECK(rng.blocks_consumed() == 1);
    rng();
    CHECK(rng.blocks_consumed() == 2);
}
