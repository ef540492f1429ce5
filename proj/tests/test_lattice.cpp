#include <set>

#include "doctest.h"
#include "trapwalk/errors.hpp"
#include "trapwalk/lattice.hpp"

using namespace trapwalk;

namespace {

Site site2(std::int32_t x, std::int32_t y) {
    Site s{};
    s.c[0] = x;
    s.c[1] = y;
    return s;
}

Site site1(std::int32_t x) {
    Site s{};
    s.c[0] = x;
    return s;
}

}  // namespace

TEST_CASE("box indexing: axis 0 fastest, site/index roundtrip") {
    BoxSpec box;
    box.d = 2;
    box.half_width = 2;
    CHECK(box.side() == 5);
    CHECK(box.volume() == 25);
    CHECK(box.site(0) == site2(-2, -2));
    CHECK(box.site(1) == site2(-1, -2));  // axis 0 advances first
    CHECK(box.index(site2(0, 0)) == 12);
    for (std::int64_t i = 0; i < box.volume(); ++i) CHECK(box.index(box.site(i)) == i);
    CHECK(box.contains(site2(2, 2)));
    CHECK_FALSE(box.contains(site2(3, 0)));
}

TEST_CASE("region: examples and norm inclusion") {
    CHECK(region(site2(1, 1), 0, Norm::L2, 2).size() == 1);  // zero radius
    CHECK(region(site2(0, 0), 1, Norm::L2, 2).size() == 5);  // unit l2 ball on Z^2
    CHECK(region(site2(0, 0), 1, Norm::Linf, 2).size() == 9);

    for (double r : {0.0, 1.0, 1.5, 2.0, 3.3}) {
        const SiteSet l2 = region(site2(0, 0), r, Norm::L2, 2);
        const SiteSet li = region(site2(0, 0), r, Norm::Linf, 2);
        for (const Site& s : l2) CHECK(li.contains(s));
        const std::int64_t w = 2 * std::int64_t(std::floor(r)) + 1;
        CHECK(li.size() == w * w);  // unclipped linf ball is a cube
    }
}

TEST_CASE("region clipped to an environment box") {
    BoxSpec box;
    box.d = 2;
    box.half_width = 1;
    const Environment env = Environment::all_open(box);
    const SiteSet clipped = region(env, site2(1, 1), 2, Norm::Linf);
    for (const Site& s : clipped) CHECK(box.contains(s));
    CHECK(clipped.size() == 9);  // quarter of the 5x5 cube survives clipping
}

TEST_CASE("environment generation: determinism and density") {
    BoxSpec box1;
    box1.d = 1;
    box1.half_width = 2;
    const Environment a = Environment::generate(box1, 0.5, 42);
    const Environment b = Environment::generate(box1, 0.5, 42);
    CHECK(a.mask_words() == b.mask_words());

    BoxSpec box2;
    box2.d = 2;
    box2.half_width = 100;
    const Environment big = Environment::generate(box2, 0.7, 7);
    const double frac = double(big.open_count()) / double(box2.volume());
    CHECK(frac == doctest::Approx(0.7).epsilon(0.015));
}

TEST_CASE("environment generation: domain errors") {
    BoxSpec box;
    box.d = 2;
    box.half_width = 2;
    CHECK_THROWS_AS(Environment::generate(box, 0.0, 1), DomainError);
    CHECK_THROWS_AS(Environment::generate(box, 1.0, 1), DomainError);
    CHECK_THROWS_AS(Environment::generate(box, -0.2, 1), DomainError);
    BoxSpec bad;
    bad.d = 4;
    CHECK_THROWS_AS(Environment::generate(bad, 0.5, 1), DomainError);
}

TEST_CASE("monotone coupling: raising p never closes a site") {
    BoxSpec box;
    box.d = 2;
    box.half_width = 10;
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        const Environment lo = Environment::generate(box, 0.3, seed);
        const Environment mid = Environment::generate(box, 0.6, seed);
        const Environment hi = Environment::generate(box, 0.9, seed);
        for (std::int64_t i = 0; i < box.volume(); ++i) {
            if (lo.is_open_index(i)) CHECK(mid.is_open_index(i));
            if (mid.is_open_index(i)) CHECK(hi.is_open_index(i));
        }
    }
}

TEST_CASE("degenerate environments and explicit site lists") {
    BoxSpec box;
    box.d = 2;
    box.half_width = 1;
    const Environment full = Environment::all_open(box);
    CHECK(full.open_count() == 9);
    const Environment empty = Environment::all_closed(box);
    CHECK(empty.open_count() == 0);

    const Environment two = Environment::from_open_sites(box, {site2(0, 0), site2(1, 1)});
    CHECK(two.open_count() == 2);
    CHECK(two.is_open(site2(0, 0)));
    CHECK(two.is_open(site2(1, 1)));
    CHECK_FALSE(two.is_open(site2(1, 0)));
    CHECK_FALSE(two.is_open(site2(5, 5)));  // outside box counts closed
}

TEST_CASE("site order and distances") {
    CHECK(site2(0, 1) < site2(1, 0));   // lexicographic by axis order
    CHECK(site1(-1) < site1(0));
    CHECK(dist2(site2(0, 0), site2(3, 4)) == 25);
    CHECK(l2_dist(site2(0, 0), site2(3, 4)) == doctest::Approx(5.0));
    CHECK(l1_dist(site2(0, 0), site2(3, 4)) == 7);
    CHECK(linf_dist(site2(0, 0), site2(3, 4)) == 4);
}

TEST_CASE("site cap: oversized boxes are rejected") {
    BoxSpec box;
    box.d = 3;
    box.half_width = 1 << 12;  // (2^13+1)^3 sites, far past the cap
    CHECK_THROWS_AS(Environment::generate(box, 0.5, 1), CapacityError);
}
