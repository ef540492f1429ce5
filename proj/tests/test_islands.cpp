#include <cmath>

#include "doctest.h"
#include "trapwalk/errors.hpp"
#include "trapwalk/experiments.hpp"
#include "trapwalk/islands.hpp"

using namespace trapwalk;

namespace {

Site site2(std::int32_t x, std::int32_t y) {
    Site s{};
    s.c[0] = x;
    s.c[1] = y;
    return s;
}

ScaleParams desk_params(int d, std::int64_t n, std::int64_t k_n, double R) {
    ScaleParams p;
    p.d = d;
    p.n = n;
    p.k_n = k_n;
    p.R = R;
    return p;
}

}  // namespace

TEST_CASE("scale parameter validation") {
    ScaleParams p = desk_params(2, 100, 5, 8);
    p.validate();
    p.c2 = 0.1;  // c2 log n = 0.46 <= 1 breaks the quantile ladder
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = desk_params(2, 100, 0, 8);
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = desk_params(4, 100, 5, 8);
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = desk_params(2, 1, 5, 8);  // log n = 0
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("scale parameter formulas") {
    ScaleParams p = desk_params(2, 1000, 7, 10);
    CHECK(p.log_n() == doctest::Approx(std::log(1000.0)));
    CHECK(p.beta_chi() ==
          doctest::Approx(std::pow(p.chi, double(p.k_n) / std::pow(p.log_n(), 1.0))));
    CHECK(p.cgood_horizon() == std::int64_t(std::floor(p.log_n())));  // (log n)^{2/d}, d=2

    // defaults: d=2 uses (log n)^3 (log log n)^2, R = k_n (log n)^2
    const std::int64_t kn = ScaleParams::default_k_n(2, 1000);
    const double ln = std::log(1000.0);
    CHECK(kn == std::int64_t(std::floor(ln * ln * ln * std::pow(std::log(ln), 2.0))));
    CHECK(ScaleParams::default_R(kn, 1000) == std::floor(double(kn) * ln * ln));
}

TEST_CASE("quantile estimation") {
    SUBCASE("degenerate all-ones samples") {
        const std::vector<double> ones(50, 1.0);
        const QuantileTable qt = estimate_quantiles(ones, desk_params(2, 100, 3, 5), 1);
        CHECK(qt.p0 == 1.0);
    }
    SUBCASE("ladder formula") {
        QuantileTable qt;
        qt.p0 = 0.5;
        qt.c2 = 2;
        qt.log_n = 10;
        CHECK(qt.p_alpha(1) == doctest::Approx(0.025).epsilon(1e-15));
        CHECK(qt.p_alpha(0) == 0.5);
    }
    SUBCASE("explicit fraction picks the order statistic") {
        std::vector<double> samples;
        for (int i = 0; i < 10000; ++i) samples.push_back(double(i));  // distinct values
        const QuantileTable qt =
            estimate_quantiles_at_fraction(samples, 1e-3, desk_params(2, 100, 3, 5), 1);
        CHECK(qt.order_index == 10);
        CHECK(qt.p0 == 9990.0);  // the 10th largest of 0..9999
        CHECK_FALSE(qt.low_resolution);
    }
    SUBCASE("fraction below resolution sets the flag") {
        std::vector<double> samples{0.1, 0.2, 0.3};
        const QuantileTable qt =
            estimate_quantiles_at_fraction(samples, 1e-6, desk_params(2, 100, 3, 5), 1);
        CHECK(qt.low_resolution);
        CHECK(qt.p0 == 0.3);
    }
    SUBCASE("empty samples rejected") {
        CHECK_THROWS_AS(estimate_quantiles({}, desk_params(2, 100, 3, 5), 1), DomainError);
    }
}

TEST_CASE("level sets and nesting") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 6;
    const Environment env = Environment::generate(b, 0.7, 4);
    const ScaleParams params = desk_params(2, 200, 4, 3);
    const HierarchyBuild hb = build_hierarchy(env, params);
    const IslandHierarchy& h = hb.hier;

    const SiteSet& u0 = h.U.at(0.0);
    const SiteSet& u1 = h.U.at(params.alpha1);
    const SiteSet& u2 = h.U.at(params.alpha2);
    for (const Site& s : u0) CHECK(u1.contains(s));
    for (const Site& s : u1) CHECK(u2.contains(s));

    // U membership is the non-strict threshold on the X field
    const double pa1 = h.quantiles.p_alpha(params.alpha1);
    for (std::int64_t i = 0; i < b.volume(); ++i) {
        const double x = hb.xfield.log_domain
                             ? std::exp(hb.xfield.values[static_cast<std::size_t>(i)])
                             : hb.xfield.values[static_cast<std::size_t>(i)];
        CHECK(u1.contains(b.site(i)) == (x >= pa1));
    }

    // D_* is non-strict, D_lambda strict
    for (const Site& s : h.dstar) CHECK(h.lambda.at(s) >= h.dstar_threshold);
    const SiteSet dl = h.dlambda(h.dstar_threshold);
    for (const Site& s : dl) CHECK(h.lambda.at(s) > h.dstar_threshold);
}

TEST_CASE("level set edge cases") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 3;
    const Environment env = Environment::all_open(b);
    const ScaleParams params = desk_params(2, 100, 3, 2);
    const HierarchyBuild hb = build_hierarchy(env, params);

    // p_alpha > 1 gives an empty level set
    QuantileTable fake = hb.hier.quantiles;
    fake.p0 = 1.0;
    const IslandHierarchy h2 =
        level_sets(hb.xfield, hb.lfield, fake, params, {-1.0});  // p_{-1} = c2 log n > 1
    CHECK(h2.U.at(-1.0).empty());

    // lambda = 0 level: all evaluated sites with strictly positive lambda
    const SiteSet d0 = hb.hier.dlambda(0.0);
    for (const Site& s : d0) CHECK(hb.hier.lambda.at(s) > 0.0);
    CHECK(d0.size() > 0);
}

TEST_CASE("consistency: high-lambda sites sit near high-X sites") {
    // {v : lambda_v > p_{a2}^{1/k_n}} subset of the B_R-dilation of U_{a2}.
    BoxSpec b;
    b.d = 2;
    b.half_width = 7;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const Environment env = Environment::generate(b, 0.72, seed);
        const ScaleParams params = desk_params(2, 300, 5, 4);
        const HierarchyBuild hb = build_hierarchy(env, params);
        const double thr = std::pow(hb.hier.quantiles.p_alpha(params.alpha2),
                                    1.0 / double(params.k_n));
        const SiteSet& u2 = hb.hier.U.at(params.alpha2);
        const SiteSet dl = hb.hier.dlambda(thr);
        for (const Site& v : dl) {
            bool near = false;
            for (const Site& u : u2)
                if (double(dist2(v, u)) <= params.R * params.R) {
                    near = true;
                    break;
                }
            CHECK(near);
        }
    }
}

TEST_CASE("island selection") {
    SUBCASE("empty candidate set") {
        BoxSpec b;
        b.d = 2;
        b.half_width = 3;
        const Environment env = Environment::all_closed(b);
        SurvivalQuery q;
        q.horizon = 2;
        const ScalarField x = survival_final(env, q);
        const LambdaField lf = lambda_field(env, SiteSet(2), 2.0);
        QuantileTable qt;
        qt.p0 = 0.5;
        qt.c2 = 1;
        qt.log_n = std::log(100.0);
        IslandHierarchy h = level_sets(x, lf, qt, desk_params(2, 100, 3, 2));
        select_islands(h, label_clusters(env));
        CHECK(h.selection.V.empty());
        CHECK(h.selection.dn.empty());
    }
    SUBCASE("two blobs joined by a corridor: one island wins the cover") {
        BoxSpec b;
        b.d = 2;
        b.half_width = 12;
        std::vector<Site> open;
        const Site ca = site2(-6, 0), cb = site2(7, 0);
        for (std::int64_t i = 0; i < b.volume(); ++i) {
            const Site s = b.site(i);
            if (dist2(s, ca) <= 9 || dist2(s, cb) <= 4 ||
                (s.c[1] == 0 && s.c[0] >= -6 && s.c[0] <= 7))
                open.push_back(s);
        }
        // spanning needs face contact: add a full row across the box
        for (std::int64_t i = 0; i < b.volume(); ++i)
            if (b.site(i).c[1] == 0) {
                if (dist2(b.site(i), ca) > 9 && dist2(b.site(i), cb) > 4) open.push_back(b.site(i));
            }
        const Environment env = Environment::from_open_sites(b, open);
        const ClusterLabeling lab = label_clusters(env);
        REQUIRE(lab.spanning_id.has_value());
        const ScaleParams params = desk_params(2, 200, 4, 4);
        const HierarchyBuild hb = build_hierarchy(env, params);
        IslandHierarchy h = hb.hier;
        if (h.dstar.size() > 0) {
            REQUIRE(h.selection.V.size() >= 1);
            // greedy order: first selected island carries the global argmax
            double best = 0;
            for (const Site& s : h.dstar)
                best = std::max(best, h.lambda.at(s));
            CHECK(h.lambda.at(h.selection.V.front()) == best);
            // cover: every candidate within 3R of a selected island
            for (const Site& s : h.dstar) {
                if (lab.label_of(s) != *lab.spanning_id) continue;
                bool covered = false;
                for (const Site& v : h.selection.V)
                    if (l2_dist(s, v) <= 3 * params.R) covered = true;
                CHECK(covered);
            }
            // the big blob has strictly larger lambda, so its center-ish site
            // wins and the small blob may not contribute a second island when
            // within 3R = 12 of it
            CHECK(l2_dist(h.selection.V.front(), ca) <= 3.0);
        }
    }
}

TEST_CASE("dn radius and membership") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 8;
    const Environment env = Environment::generate(b, 0.75, 6);
    const ScaleParams params = desk_params(2, 50, 3, 3);
    const HierarchyBuild hb = build_hierarchy(env, params);
    const IslandSelection& sel = hb.hier.selection;
    const double rad = std::pow(std::log(50.0), params.iota) * double(params.k_n);
    CHECK(sel.dn_radius == doctest::Approx(rad));
    for (const Site& s : sel.dn) {
        bool inside = false;
        for (const Site& v : sel.V)
            if (double(dist2(s, v)) <= rad * rad) inside = true;
        CHECK(inside);
    }
}

TEST_CASE("c-good sites") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 5;
    const ScaleParams params = desk_params(2, 54, 3, 3);  // floor(log 54) = 3 horizon
    REQUIRE(params.cgood_horizon() == 3);

    const Environment full = Environment::all_open(b);
    const SiteSet good = c_good_sites(full, 0.9, params);
    CHECK(good.contains(site2(0, 0)));  // interior survives 3 steps surely

    std::vector<Site> open;
    for (std::int64_t i = 0; i < b.volume(); ++i)
        if (b.site(i) != site2(1, 0)) open.push_back(b.site(i));
    const Environment holed = Environment::from_open_sites(b, open);
    const SiteSet strict = c_good_sites(holed, 1.0, params);
    CHECK_FALSE(strict.contains(site2(0, 0)));  // a neighbor obstacle spoils c = 1
    CHECK_FALSE(strict.contains(site2(1, 0)));  // closed sites never qualify
}

TEST_CASE("epsilon-fair boxes") {
    CHECK(default_epsilon(2, 0.5) == doctest::Approx(std::pow(4.0, -27.0)));
    CHECK(default_epsilon(1, 0.5) ==
          doctest::Approx(std::min(0.25, std::pow(2.0, -9.0))));

    BoxSpec b;
    b.d = 2;
    b.half_width = 7;
    SUBCASE("all closed: nothing is fair") {
        const FairBoxAnalysis fa =
            epsilon_fair_analysis(Environment::all_closed(b), 2, 1e-6, Site{});
        CHECK(fa.fair_count == 0);
        for (auto f : fa.fair) CHECK(f == 0);
    }
    SUBCASE("all open: every box is fair and clusters into one") {
        const FairBoxAnalysis fa =
            epsilon_fair_analysis(Environment::all_open(b), 2, 1e-6, Site{});
        CHECK(fa.fair_count == std::int64_t(fa.centers.size()));
        CHECK(fa.cluster_sizes.size() == 1);
        CHECK(fa.cluster_sizes[0] == fa.fair_count);
        CHECK(fa.tile_center(site2(1, 1)) == site2(0, 0));  // r=2 tile spans [-2,2]
        CHECK(fa.tile_center(site2(3, 0)) == site2(5, 0));
        CHECK(fa.cluster_of(site2(1, 1)) == 0);
    }
    SUBCASE("fair cluster near a site") {
        const Environment full = Environment::all_open(b);
        const auto members = fair_cluster_near(full, site2(1, 0), 2, 1e-6, 6.0);
        CHECK(members.size() > 0);
        bool has_own = false;
        for (const Site& c : members) has_own = has_own || c == site2(1, 0);
        CHECK(has_own);  // the tiling is anchored at v itself
    }
}

TEST_CASE("dense-obstacle event report") {
    BoxSpec b;
    b.d = 2;
    b.half_width = 6;
    const ScaleParams params = desk_params(2, 54, 3, 3);
    const Environment sparse = Environment::all_open(b);
    const GvReport r = g_event_report(sparse, site2(0, 0), params, 0.5, 1.0, 1.0);
    CHECK_FALSE(r.obstacles_dense);  // no obstacle anywhere near the center
    CHECK(r.cgood_count > r.cgood_bound);
    CHECK_FALSE(r.holds);

    const Environment blocked = Environment::all_closed(b);
    const GvReport r2 = g_event_report(blocked, site2(0, 0), params, 0.5, 1.0, 1.0);
    CHECK(r2.obstacles_dense);
    CHECK(r2.cgood_count == 0);
    CHECK(r2.holds);
}
