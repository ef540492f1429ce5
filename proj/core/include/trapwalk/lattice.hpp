#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "trapwalk/errors.hpp"

namespace trapwalk {

inline constexpr int kMaxDim = 3;

// Lattice site in Z^d, d <= 3. Unused axes are held at zero so that
// comparison and hashing are dimension-agnostic. Ordering is lexicographic
// on (x, y, z); every tie-break in the library uses this order.
struct Site {
    std::array<std::int32_t, kMaxDim> c{0, 0, 0};

    Site() = default;
    explicit Site(std::int32_t x) : c{x, 0, 0} {}
    Site(std::int32_t x, std::int32_t y) : c{x, y, 0} {}
    Site(std::int32_t x, std::int32_t y, std::int32_t z) : c{x, y, z} {}

    std::int32_t& operator[](int a) { return c[static_cast<std::size_t>(a)]; }
    std::int32_t operator[](int a) const { return c[static_cast<std::size_t>(a)]; }

    bool operator==(const Site&) const = default;
    auto operator<=>(const Site&) const = default;
};

inline std::int64_t dist2(Site a, Site b) {
    std::int64_t s = 0;
    for (int i = 0; i < kMaxDim; ++i) {
        const std::int64_t d = std::int64_t(a.c[i]) - b.c[i];
        s += d * d;
    }
    return s;
}

inline double l2_dist(Site a, Site b) { return std::sqrt(double(dist2(a, b))); }

inline std::int64_t l1_dist(Site a, Site b) {
    std::int64_t s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += std::abs(std::int64_t(a.c[i]) - b.c[i]);
    return s;
}

inline std::int32_t linf_dist(Site a, Site b) {
    std::int32_t m = 0;
    for (int i = 0; i < kMaxDim; ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
    return m;
}

enum class Norm { L1, L2, Linf };

inline bool in_norm_ball(Site x, Site center, double radius, Norm norm) {
    switch (norm) {
        case Norm::L1: return double(l1_dist(x, center)) <= radius;
        case Norm::L2: return double(dist2(x, center)) <= radius * radius;
        case Norm::Linf: return double(linf_dist(x, center)) <= radius;
    }
    return false;
}

enum class BoundaryRule : std::uint8_t { Absorbing = 0 };

// Centered box [origin - L, origin + L]^d. Sites are indexed row-major with
// axis 0 fastest; that layout is also the on-disk order.
struct BoxSpec {
    int d = 2;
    std::int32_t half_width = 0;
    Site origin{};

    // Default cap: 2^28 sites (~32 MiB of mask, ~2 GiB per double field).
    static constexpr std::int64_t kDefaultSiteCap = std::int64_t(1) << 28;

    std::int64_t side() const { return 2 * std::int64_t(half_width) + 1; }

    std::int64_t volume() const {
        std::int64_t v = 1;
        for (int a = 0; a < d; ++a) v *= side();
        return v;
    }

    void validate(std::int64_t site_cap = kDefaultSiteCap) const {
        if (d < 1 || d > kMaxDim) throw DomainError("box dimension must be 1, 2 or 3");
        if (half_width < 0) throw DomainError("box half-width must be non-negative");
        if (volume() > site_cap) throw CapacityError("box volume exceeds the configured site cap");
    }

    bool contains(Site s) const {
        for (int a = 0; a < d; ++a)
            if (std::abs(std::int64_t(s.c[a]) - origin.c[a]) > half_width) return false;
        for (int a = d; a < kMaxDim; ++a)
            if (s.c[a] != 0) return false;
        return true;
    }

    std::int64_t index(Site s) const {
        std::int64_t idx = 0, stride = 1;
        for (int a = 0; a < d; ++a) {
            idx += (std::int64_t(s.c[a]) - origin.c[a] + half_width) * stride;
            stride *= side();
        }
        return idx;
    }

    Site site(std::int64_t index) const {
        Site s;
        for (int a = 0; a < d; ++a) {
            s.c[a] = std::int32_t(index % side()) - half_width + origin.c[a];
            index /= side();
        }
        return s;
    }

    Site lo() const {
        Site s = origin;
        for (int a = 0; a < d; ++a) s.c[a] -= half_width;
        return s;
    }

    Site hi() const {
        Site s = origin;
        for (int a = 0; a < d; ++a) s.c[a] += half_width;
        return s;
    }

    bool operator==(const BoxSpec&) const = default;
};

// Sorted, deduplicated set of sites. Small enough for binary-search
// membership; dense per-box masks are built where hot loops need them.
class SiteSet {
public:
    SiteSet() = default;
    explicit SiteSet(int d) : d_(d) {}

    static SiteSet of(int d, std::vector<Site> sites);

    int dim() const { return d_; }
    std::int64_t size() const { return std::int64_t(sites_.size()); }
    bool empty() const { return sites_.empty(); }
    const std::vector<Site>& sites() const { return sites_; }

    bool contains(Site s) const;
    void insert(Site s);

    auto begin() const { return sites_.begin(); }
    auto end() const { return sites_.end(); }

    bool operator==(const SiteSet&) const = default;

private:
    int d_ = 0;
    std::vector<Site> sites_;  // sorted lexicographically
};

// One double per box site. `log_domain` marks values that are natural logs
// of probabilities (with -inf for zero); producers set it when the linear
// representation would underflow.
struct ScalarField {
    BoxSpec box;
    std::vector<double> values;
    bool log_domain = false;

    double at(Site s) const {
        if (!box.contains(s)) throw DomainError("site outside field box");
        return values[static_cast<std::size_t>(box.index(s))];
    }

    double prob_at(Site s) const {
        const double v = at(s);
        return log_domain ? std::exp(v) : v;
    }
};

// Bernoulli site environment on a centered box. Each site is open with
// probability p, independently; everything outside the box is an obstacle
// (the walk is absorbed there). The per-site noise u(site, seed) does not
// depend on p, which yields a monotone coupling: for a fixed seed the open
// set only grows with p.
class Environment {
public:
    static Environment generate(const BoxSpec& box, double p, std::uint64_t seed,
                                BoundaryRule rule = BoundaryRule::Absorbing,
                                std::int64_t site_cap = BoxSpec::kDefaultSiteCap);

    // Test/bench constructors with a forced mask; p and seed are recorded
    // as metadata only.
    static Environment all_open(const BoxSpec& box, double p = 0.5, std::uint64_t seed = 0);
    static Environment all_closed(const BoxSpec& box, double p = 0.5, std::uint64_t seed = 0);
    static Environment from_open_sites(const BoxSpec& box, const std::vector<Site>& open,
                                       double p = 0.5, std::uint64_t seed = 0);
    static Environment from_mask(const BoxSpec& box, const std::vector<std::uint8_t>& open,
                                 double p, std::uint64_t seed);

    const BoxSpec& box() const { return box_; }
    double p() const { return p_; }
    std::uint64_t seed() const { return seed_; }
    BoundaryRule boundary_rule() const { return rule_; }

    bool is_open_index(std::int64_t i) const {
        return (words_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
    }

    // False outside the box: the exterior is all obstacles.
    bool is_open(Site s) const { return box_.contains(s) && is_open_index(box_.index(s)); }

    std::int64_t open_count() const;
    const std::vector<std::uint64_t>& mask_words() const { return words_; }

    // The deterministic uniform behind generate(); exposed so coupling
    // properties can be tested directly.
    static double site_uniform(std::uint64_t seed, Site s);

private:
    Environment(const BoxSpec& box, double p, std::uint64_t seed, BoundaryRule rule)
        : box_(box), p_(p), seed_(seed), rule_(rule),
          words_(static_cast<std::size_t>((box.volume() + 63) / 64), 0) {}

    void set_open(std::int64_t i) {
        words_[static_cast<std::size_t>(i >> 6)] |= std::uint64_t(1) << (i & 63);
    }

    BoxSpec box_;
    double p_;
    std::uint64_t seed_;
    BoundaryRule rule_;
    std::vector<std::uint64_t> words_;
};

// All sites within `radius` of `center` in the given norm, in lexicographic
// order. The Environment overload clips to the ambient box.
SiteSet region(Site center, double radius, Norm norm, int d);
SiteSet region(const Environment& env, Site center, double radius, Norm norm);

// Precomputed neighbor table for a box. Out-of-box neighbors map to the
// sentinel index `volume`, so kernels can keep a zero slot there and avoid
// branching on the boundary.
struct BoxStencil {
    explicit BoxStencil(const BoxSpec& box);

    int d;
    std::int64_t volume;
    std::vector<std::int32_t> nbr;  // 2d entries per site

    const std::int32_t* row(std::int64_t i) const { return nbr.data() + i * 2 * d; }
};

}  // namespace trapwalk
