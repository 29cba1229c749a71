#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "lavg/rng.hpp"

using namespace lavg;

TEST_CASE("same seed reproduces the identical stream", "[rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    Rng c(42), d(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(c.gaussian() == d.gaussian());
    }
}

TEST_CASE("different seeds decorrelate", "[rng]") {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() == b.next_u64()) ++equal;
    REQUIRE(equal == 0);
}

TEST_CASE("uniform and gaussian moments", "[rng]") {
    Rng rng(7);
    const int n = 200000;
    double su = 0.0, su2 = 0.0, sg = 0.0, sg2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        su2 += u * u;
        const double g = rng.gaussian();
        sg += g;
        sg2 += g * g;
    }
    REQUIRE_THAT(su / n, Catch::Matchers::WithinAbs(0.5, 0.005));
    REQUIRE_THAT(su2 / n - 0.25, Catch::Matchers::WithinAbs(1.0 / 12.0, 0.005));
    REQUIRE_THAT(sg / n, Catch::Matchers::WithinAbs(0.0, 0.01));
    REQUIRE_THAT(sg2 / n, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("seed mixing separates nearby indices", "[rng]") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t t = 0; t < 50; ++t)
        for (std::uint64_t r = 0; r < 50; ++r) seeds.insert(mix_seed(1, t, r));
    REQUIRE(seeds.size() == 2500);
    // Swapping the roles of the two indices must not collide either.
    REQUIRE(mix_seed(1, 3, 5) != mix_seed(1, 5, 3));
}
