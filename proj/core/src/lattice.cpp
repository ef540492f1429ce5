#include "trapwalk/lattice.hpp"

#include <algorithm>
#include <bit>

#include "trapwalk/rng.hpp"

namespace trapwalk {

SiteSet SiteSet::of(int d, std::vector<Site> sites) {
    SiteSet out(d);
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    out.sites_ = std::move(sites);
    return out;
}

bool SiteSet::contains(Site s) const {
    return std::binary_search(sites_.begin(), sites_.end(), s);
}

void SiteSet::insert(Site s) {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
    if (it == sites_.end() || *it != s) sites_.insert(it, s);
}

double Environment::site_uniform(std::uint64_t seed, Site s) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    for (int a = 0; a < kMaxDim; ++a)
        h = mix64(h ^ std::uint64_t(std::uint32_t(s.c[a])) ^ (std::uint64_t(a + 1) << 32));
    return double(h >> 11) * 0x1.0p-53;
}

Environment Environment::generate(const BoxSpec& box, double p, std::uint64_t seed,
                                  BoundaryRule rule, std::int64_t site_cap) {
    box.validate(site_cap);
    if (!(p > 0.0 && p < 1.0)) throw DomainError("open probability must lie in (0,1)");
    Environment env(box, p, seed, rule);
    const std::int64_t n = box.volume();
    for (std::int64_t i = 0; i < n; ++i)
        if (site_uniform(seed, box.site(i)) < p) env.set_open(i);
    return env;
}

Environment Environment::all_open(const BoxSpec& box, double p, std::uint64_t seed) {
    box.validate();
    Environment env(box, p, seed, BoundaryRule::Absorbing);
    const std::int64_t n = box.volume();
    for (std::int64_t i = 0; i < n; ++i) env.set_open(i);
    return env;
}

Environment Environment::all_closed(const BoxSpec& box, double p, std::uint64_t seed) {
    box.validate();
    return Environment(box, p, seed, BoundaryRule::Absorbing);
}

Environment Environment::from_open_sites(const BoxSpec& box, const std::vector<Site>& open,
                                         double p, std::uint64_t seed) {
    box.validate();
    Environment env(box, p, seed, BoundaryRule::Absorbing);
    for (const Site& s : open) {
        if (!box.contains(s)) throw DomainError("open site outside box");
        env.set_open(box.index(s));
    }
    return env;
}

Environment Environment::from_mask(const BoxSpec& box, const std::vector<std::uint8_t>& open,
                                   double p, std::uint64_t seed) {
    box.validate();
    if (std::int64_t(open.size()) != box.volume())
        throw DomainError("mask length does not match box volume");
    Environment env(box, p, seed, BoundaryRule::Absorbing);
    for (std::int64_t i = 0; i < box.volume(); ++i)
        if (open[static_cast<std::size_t>(i)]) env.set_open(i);
    return env;
}

std::int64_t Environment::open_count() const {
    std::int64_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
}

SiteSet region(Site center, double radius, Norm norm, int d) {
    if (d < 1 || d > kMaxDim) throw DomainError("region dimension must be 1, 2 or 3");
    if (radius < 0) return SiteSet(d);
    const std::int32_t r = std::int32_t(std::floor(radius));
    std::vector<Site> out;
    Site s;
    std::array<std::int32_t, kMaxDim> lo{}, hi{};
    for (int a = 0; a < kMaxDim; ++a) {
        lo[a] = a < d ? center.c[a] - r : 0;
        hi[a] = a < d ? center.c[a] + r : 0;
    }
    for (std::int32_t x = lo[0]; x <= hi[0]; ++x)
        for (std::int32_t y = lo[1]; y <= hi[1]; ++y)
            for (std::int32_t z = lo[2]; z <= hi[2]; ++z) {
                s = Site(x, y, z);
                if (in_norm_ball(s, center, radius, norm)) out.push_back(s);
            }
    return SiteSet::of(d, std::move(out));
}

SiteSet region(const Environment& env, Site center, double radius, Norm norm) {
    SiteSet full = region(center, radius, norm, env.box().d);
    std::vector<Site> clipped;
    for (const Site& s : full)
        if (env.box().contains(s)) clipped.push_back(s);
    return SiteSet::of(env.box().d, std::move(clipped));
}

BoxStencil::BoxStencil(const BoxSpec& box) : d(box.d), volume(box.volume()) {
    box.validate();
    nbr.assign(static_cast<std::size_t>(volume) * 2 * d, std::int32_t(volume));
    std::array<std::int64_t, kMaxDim> stride{};
    std::int64_t st = 1;
    for (int a = 0; a < d; ++a) {
        stride[a] = st;
        st *= box.side();
    }
    for (std::int64_t i = 0; i < volume; ++i) {
        const Site s = box.site(i);
        std::int32_t* row = nbr.data() + i * 2 * d;
        // Fixed neighbor order: axis ascending, minus before plus. Kernels
        // sum in this order, which pins the floating-point result.
        for (int a = 0; a < d; ++a) {
            if (s.c[a] - box.origin.c[a] > -box.half_width) row[2 * a] = std::int32_t(i - stride[a]);
            if (s.c[a] - box.origin.c[a] < box.half_width) row[2 * a + 1] = std::int32_t(i + stride[a]);
        }
    }
}

}  // namespace trapwalk
