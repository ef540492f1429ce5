#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "trapwalk/errors.hpp"
#include "trapwalk/spectral.hpp"
#include "trapwalk/survival.hpp"

using namespace trapwalk;

namespace {

Site site1(std::int32_t x) {
    Site s{};
    s.c[0] = x;
    return s;
}

Site site2(std::int32_t x, std::int32_t y) {
    Site s{};
    s.c[0] = x;
    s.c[1] = y;
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

// Dense walk matrix over the component for the Jacobi oracle.
std::vector<std::vector<double>> walk_matrix(const RestrictedComponent& comp, int d) {
    const auto& sites = comp.sites.sites();
    std::vector<std::vector<double>> a(sites.size(), std::vector<double>(sites.size(), 0.0));
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            if (l1_dist(sites[i], sites[j]) == 1) a[i][j] = 1.0 / (2.0 * d);
    return a;
}

}  // namespace

TEST_CASE("degenerate components") {
    const Environment none = Environment::all_closed(segment_env(2, {}).box());
    const RestrictedComponent empty = restricted_component(none, site1(0), 3);
    const SpectralResult r0 = principal_eigen(none, empty);
    CHECK(r0.lambda == 0.0);
    CHECK(r0.eigvec.empty());

    const Environment lone = segment_env(3, {0});  // isolated open site
    const RestrictedComponent single = restricted_component(lone, site1(0), 3);
    CHECK(single.sites.size() == 1);
    CHECK(principal_eigen(lone, single).lambda == 0.0);
}

TEST_CASE("pinned path eigenvalues") {
    const Environment three = segment_env(4, {-1, 0, 1});
    const SpectralResult r3 =
        principal_eigen(three, restricted_component(three, site1(0), 10));
    CHECK(r3.lambda == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-10));
    CHECK(r3.residual <= 1e-10);
    for (double v : r3.eigvec) CHECK(v > 0.0);  // Perron vector

    const Environment five = segment_env(6, {0, 1, 2, 3, 4});
    const SpectralResult r5 = principal_eigen(five, restricted_component(five, site1(2), 10));
    CHECK(r5.lambda == doctest::Approx(std::cos(M_PI / 6.0)).epsilon(1e-9));
}

TEST_CASE("open path of length L has lambda = cos(pi/(L+1))") {
    for (std::int32_t L : {2, 4, 7, 10, 15}) {
        std::vector<std::int32_t> open;
        for (std::int32_t x = 0; x < L; ++x) open.push_back(x);
        const Environment env = segment_env(L + 2, open);
        const SpectralResult r = principal_eigen(env, restricted_component(env, site1(0), 1000));
        CHECK(r.lambda == doctest::Approx(std::cos(M_PI / (L + 1))).epsilon(1e-10));
    }
}

TEST_CASE("jacobi oracle agreement on random components") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 3;
    for (std::uint64_t seed : {1ULL, 5ULL, 17ULL}) {
        const Environment env = Environment::generate(b, 0.6, seed);
        for (std::int64_t i = 0; i < b.volume(); ++i) {
            if (!env.is_open_index(i)) continue;
            const RestrictedComponent comp = restricted_component(env, b.site(i), 2.5);
            const SpectralResult r = principal_eigen(env, comp);
            const double oracle = oracles::jacobi_max_eigenvalue(walk_matrix(comp, 2));
            CHECK(r.lambda == doctest::Approx(oracle).epsilon(1e-9));
            break;  // one component per environment suffices here
        }
    }
}

TEST_CASE("domain monotonicity in R") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 6;
    const Environment env = Environment::generate(b, 0.7, 3);
    for (std::int64_t i = 0; i < b.volume(); ++i) {
        if (!env.is_open_index(i)) continue;
        const Site v = b.site(i);
        double prev = -1;
        for (double R : {1.0, 2.0, 4.0, 8.0}) {
            const double lam = principal_eigen(env, restricted_component(env, v, R)).lambda;
            CHECK(lam >= prev - 1e-12);
            prev = lam;
        }
        break;
    }
}

TEST_CASE("residual certificate and convergence error") {
    const Environment five = segment_env(6, {0, 1, 2, 3, 4});
    const RestrictedComponent comp = restricted_component(five, site1(2), 10);
    SpectralOptions tight;
    tight.tol = 1e-13;
    const SpectralResult ok = principal_eigen(five, comp, tight);
    CHECK(ok.residual <= 1e-13);

    SpectralOptions strangled;
    strangled.tol = 1e-14;
    strangled.max_iterations = 2;
    CHECK_THROWS_AS(principal_eigen(five, comp, strangled), ConvergenceError);
    try {
        principal_eigen(five, comp, strangled);
    } catch (const ConvergenceError& e) {
        CHECK(e.residual > 1e-14);
        CHECK(e.iterations == 2);
    }
}

TEST_CASE("lambda field: cache identity and closed sites") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 4;
    const Environment env = Environment::generate(b, 0.65, 8);
    std::vector<Site> all;
    for (std::int64_t i = 0; i < b.volume(); ++i) all.push_back(b.site(i));
    const LambdaField lf = lambda_field(env, SiteSet::of(2, all), 3.0);
    CHECK(lf.complete);
    for (std::int64_t i = 0; i < b.volume(); ++i) {
        const Site v = b.site(i);
        CHECK(lf.is_evaluated(v));
        if (!env.is_open_index(i)) CHECK(lf.at(v) == 0.0);
    }
    // sites sharing a component share the cached lambda bit-exactly
    for (const auto& entry : lf.components) {
        for (const Site& s : entry.sites) {
            const RestrictedComponent again = restricted_component(env, s, 3.0);
            if (again.sites.sites() == entry.sites)
                CHECK(lf.at(s) == entry.lambda);
        }
    }
}

TEST_CASE("eigv corollary: lambda sandwiched by survival scores") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 5;
    const double R = 4;
    const std::int64_t k_n = 8;
    const Environment env = Environment::generate(b, 0.7, 12);
    SurvivalQuery q;
    q.horizon = k_n;
    const ScalarField x = survival_final(env, q);
    REQUIRE_FALSE(x.log_domain);
    const double cst = std::pow(2.0 * R, 1.0);  // (2R)^{d/2}, d = 2
    for (std::int64_t i = 0; i < b.volume(); ++i) {
        if (!env.is_open_index(i)) continue;
        const Site v = b.site(i);
        const RestrictedComponent comp = restricted_component(env, v, R);
        const double lam = principal_eigen(env, comp).lambda;
        const double lower = std::pow(x.at(v) / cst, 1.0 / double(k_n));
        double xmax = 0;
        for (const Site& u : comp.sites) xmax = std::max(xmax, x.at(u));
        const double upper = std::pow(xmax, 1.0 / double(k_n));
        CHECK(lower <= lam * (1 + 1e-8));
        CHECK(lam <= upper * (1 + 1e-8));
    }
}
