#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "trapwalk/errors.hpp"
#include "trapwalk/survival.hpp"

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

Environment segment_env(std::int32_t hw, std::vector<std::int32_t> open) {
    BoxSpec b;
    b.d = 1;
    b.half_width = hw;
    std::vector<Site> sites;
    for (auto x : open) sites.push_back(site1(x));
    return Environment::from_open_sites(b, sites);
}

}  // namespace

TEST_CASE("closed start site never survives") {
    const Environment env = segment_env(3, {1, 2});
    SurvivalQuery q;
    q.horizon = 4;
    const SurvivalField f = survival_field(env, q);
    for (std::int64_t t = 0; t <= 4; ++t) CHECK(f.value(t, site1(0)) == 0.0);
}

TEST_CASE("corner of an open box loses half its moves") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 2;
    const Environment env = Environment::all_open(b);
    SurvivalQuery q;
    q.horizon = 1;
    CHECK(survival_probability(env, site2(-2, -2), q) == 0.5);
}

TEST_CASE("pinned example: four open sites, two steps") {
    const Environment env = segment_env(5, {0, 1, 2, 3});
    SurvivalQuery q;
    q.horizon = 2;
    const SurvivalField f = survival_field(env, q);
    CHECK(f.value(1, site1(0)) == 0.5);
    CHECK(f.value(1, site1(2)) == 1.0);
    CHECK(f.value(2, site1(1)) == 0.75);
}

TEST_CASE("survival_probability examples") {
    const Environment wide = segment_env(6, {0, 1, 2, 3, 4, 5, 6, -1, -2, -3, -4, -5, -6});
    SurvivalQuery q0;
    q0.horizon = 0;
    CHECK(survival_probability(wide, site1(0), q0) == 1.0);

    const Environment env = segment_env(6, {0, 1, 2, 3, 4, 5, 6});
    SurvivalQuery q2;
    q2.horizon = 2;
    CHECK(survival_probability(env, site1(3), q2) == 1.0);  // boundary out of reach

    SurvivalQuery qa;
    qa.horizon = 2;
    qa.avoid = SiteSet::of(1, {site1(3)});
    CHECK(survival_probability(env, site1(3), qa) == 0.0);  // start inside avoid

    CHECK_THROWS_AS(survival_probability(env, site1(40), q2), DomainError);
}

TEST_CASE("monotonicity is exact in floating point") {
    const Environment env = Environment::generate(
        [] {
            BoxSpec b;
            b.d = 2;
            b.half_width = 6;
            return b;
        }(),
        0.6, 11);
    SurvivalQuery q;
    q.horizon = 30;
    q.avoid = SiteSet::of(2, {site2(1, 1), site2(-2, 0)});
    const SurvivalField f = survival_field(env, q);
    auto cur = f.cursor();
    for (std::int64_t t = 1; t <= 30; ++t) {
        auto [now, prev] = cur.pair(t);
        for (std::size_t i = 0; i < now.size(); ++i) CHECK(now[i] <= prev[i]);
    }
}

TEST_CASE("enumeration oracle equivalence with avoid and confine") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 2;
    for (std::uint64_t seed : {3ULL, 4ULL}) {
        const Environment env = Environment::generate(b, 0.75, seed);
        SurvivalQuery q;
        q.horizon = 6;
        if (seed == 4) {
            q.avoid = SiteSet::of(2, {site2(1, 0)});
            q.confine = region(env, site2(0, 0), 2.5, Norm::L2);
        }
        const auto oracle = oracles::brute_survival_table(env, q);
        const SurvivalField f = survival_field(env, q);
        auto cur = f.cursor();
        for (std::int64_t t = 0; t <= q.horizon; ++t) {
            auto lvl = cur.level(t);
            for (std::int64_t i = 0; i < b.volume(); ++i)
                CHECK(lvl[static_cast<std::size_t>(i)] ==
                      doctest::Approx(oracle[static_cast<std::size_t>(t)]
                                            [static_cast<std::size_t>(i)])
                          .epsilon(1e-12));
        }
    }
}

TEST_CASE("markov splitting: forward kernel composes with survival") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 3;
    const Environment env = Environment::generate(b, 0.8, 21);
    const Site v = site2(0, 0);
    if (!env.is_open(v)) return;
    const std::int64_t s = 3, t = 4;
    SurvivalQuery qs;
    qs.horizon = s;
    const ScalarField fs = forward_kernel(env, v, qs);
    SurvivalQuery qt;
    qt.horizon = t;
    const ScalarField ht = survival_final(env, qt);
    REQUIRE_FALSE(fs.log_domain);
    REQUIRE_FALSE(ht.log_domain);
    double composed = 0;
    for (std::int64_t i = 0; i < b.volume(); ++i)
        composed += fs.values[static_cast<std::size_t>(i)] * ht.values[static_cast<std::size_t>(i)];
    SurvivalQuery qst;
    qst.horizon = s + t;
    CHECK(survival_probability(env, v, qst) == doctest::Approx(composed).epsilon(1e-12));
}

TEST_CASE("checkpointed field replays levels bit-exactly") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 4;
    const Environment env = Environment::generate(b, 0.7, 9);
    SurvivalQuery q;
    q.horizon = 41;
    FieldOptions full;
    full.storage = FieldStorage::Full;
    FieldOptions chk;
    chk.storage = FieldStorage::Checkpointed;
    const SurvivalField a = survival_field(env, q, full);
    const SurvivalField c = survival_field(env, q, chk);
    CHECK_FALSE(a.checkpointed());
    CHECK(c.checkpointed());
    auto cur = c.cursor();
    for (std::int64_t t = 41; t >= 0; --t) {  // descending, the sampler's order
        auto la = a.level(t);
        auto lc = cur.level(t);
        for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i] == lc[i]);
    }
}

TEST_CASE("log-domain restart on underflow") {
    const Environment env = segment_env(1, {0, 1});  // two-site segment, h_t = 2^{-t}
    SurvivalQuery q;
    q.horizon = 1100;
    const SurvivalField f = survival_field(env, q);
    CHECK(f.domain() == ValueDomain::Log);
    CHECK(f.log_value(1100, site1(0)) ==
          doctest::Approx(-1100.0 * std::log(2.0)).epsilon(1e-9));
    CHECK(f.value(1100, site1(0)) == 0.0);  // underflows back to zero in linear

    const ScalarField fin = survival_final(env, q);
    CHECK(fin.log_domain);
    CHECK(fin.at(site1(1)) == doctest::Approx(-1100.0 * std::log(2.0)).epsilon(1e-9));

    const auto trace = survival_log_trace(env, site1(0), q);
    CHECK(trace[0] == 0.0);
    CHECK(trace[1100] == doctest::Approx(-1100.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("endpoint law examples") {
    SUBCASE("zero steps is a point mass") {
        const Environment env = segment_env(2, {0, 1});
        const ScalarField law = endpoint_law(env, site1(0), 0);
        CHECK(law.at(site1(0)) == 1.0);
        CHECK(law.at(site1(1)) == 0.0);
    }
    SUBCASE("three sites, one step") {
        const Environment env = segment_env(2, {0, 1, 2});
        const ScalarField law = endpoint_law(env, site1(1), 1);
        CHECK(law.at(site1(0)) == 0.5);
        CHECK(law.at(site1(2)) == 0.5);
    }
    SUBCASE("four sites, two steps") {
        const Environment env = segment_env(5, {0, 1, 2, 3});
        const ScalarField law = endpoint_law(env, site1(1), 2);
        CHECK(law.at(site1(1)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(law.at(site1(3)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        double total = 0;
        for (double v : law.values) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero survival raises") {
        const Environment env = segment_env(2, {0});
        CHECK_THROWS_AS(endpoint_law(env, site1(0), 1), NoSurvivingPath);
        CHECK_THROWS_AS(endpoint_law(env, site1(1), 1), NoSurvivingPath);
    }
}

TEST_CASE("confined ball survival satisfies the restart power-law floor") {
    // Markov restarts at the worst ball site give the finite form of the
    // stay-in-ball strategy: with c = min_x P^x(confined for r^2 steps),
    // P(confined for k steps) >= c^{floor(k/r^2)+1} >= c^{k/r^2+1}.
    const std::int32_t r = 5;
    BoxSpec b;
    b.d = 2;
    b.half_width = 2 * r + 2;
    const Environment env = Environment::all_open(b);
    const SiteSet ball = region(env, site2(0, 0), 2.0 * r, Norm::L2);
    const std::int64_t k0 = std::int64_t(r) * r;
    SurvivalQuery q;
    q.horizon = 4 * k0;
    q.confine = ball;
    const SurvivalField f = survival_field(env, q);
    double c = 1.0;
    for (const Site& x : ball) c = std::min(c, f.value(k0, x));
    REQUIRE(c > 0);
    for (std::int64_t k : {k0 / 2, k0, 2 * k0, 4 * k0}) {
        const double lhs = f.value(k, site2(0, 0));
        const double floor = std::pow(c, double(k) / double(r * r) + 1.0);
        CHECK(lhs >= floor * (1 - 1e-9));
    }
}
