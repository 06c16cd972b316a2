#include <doctest.h>

#include <cmath>
#include <set>

#include "apsde/rng.hpp"

using namespace apsde;

TEST_CASE("philox known-answer vectors")
{
    // Random123 kat_vectors for philox4x32_10.
    auto const zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    CHECK(zero == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu,
                                      0x9b00dbd8u});
    auto const ones = Philox4x32::block(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
        {0xffffffffu, 0xffffffffu});
    CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u,
                                      0x6d5451fdu});
    auto const pi = Philox4x32::block(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
        {0xa4093822u, 0x299f31d0u});
    CHECK(pi == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u,
                                    0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct")
{
    RandomStream a({42, 7, 3});
    RandomStream b({42, 7, 3});
    RandomStream c({42, 8, 3});
    RandomStream d({42, 7, 4});
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i)
    {
        auto const x = a.next_u64();
        CHECK(x == b.next_u64());
        seen.insert(x);
        seen.insert(c.next_u64());
        seen.insert(d.next_u64());
    }
    CHECK(seen.size() == 3000);
}

TEST_CASE("uniform and normal moments")
{
    RandomStream rng({1, 0, 0});
    int const n = 200000;
    double su = 0, sn = 0, sn2 = 0, se = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i)
    {
        double const u = rng.uniform();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        su += u;
        double const z = rng.normal();
        sn += z;
        sn2 += z * z;
        se += rng.exponential(2.0);
    }
    CHECK(umin > 0);
    CHECK(umax < 1);
    CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(se / n - 0.5) < 4 * 0.5 / std::sqrt(n));
}
