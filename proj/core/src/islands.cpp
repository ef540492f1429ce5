#include "trapwalk/islands.hpp"

#include <algorithm>
#include <cmath>

namespace trapwalk {

std::int64_t ScaleParams::default_k_n(int d, std::int64_t n) {
    if (d < 1 || d > kMaxDim) throw DomainError("dimension must be 1, 2 or 3");
    if (n < 3) throw DomainError("scale n must be at least 3");
    const double L = std::log(double(n));
    double v;
    if (d == 2) {
        const double ll = std::log(L);
        v = L * L * L * ll * ll;
    } else {
        v = std::pow(L, 4.0 - 2.0 / d);
    }
    return std::max<std::int64_t>(1, std::int64_t(std::floor(v)));
}

double ScaleParams::default_R(std::int64_t k_n, std::int64_t n) {
    const double L = std::log(double(n));
    return std::max(1.0, std::floor(double(k_n) * L * L));
}

ScaleParams ScaleParams::for_scale(int d, std::int64_t n) {
    ScaleParams p;
    p.d = d;
    p.n = n;
    p.k_n = default_k_n(d, n);
    p.R = default_R(p.k_n, n);
    p.alpha1 = 3.0 * d;
    p.alpha2 = 4.0 * d;
    p.validate();
    return p;
}

double ScaleParams::beta_chi() const {
    return std::pow(chi, double(k_n) / std::pow(log_n(), 2.0 / d));
}

std::int64_t ScaleParams::cgood_horizon() const {
    return std::max<std::int64_t>(1, std::int64_t(std::floor(std::pow(log_n(), 2.0 / d))));
}

void ScaleParams::validate() const {
    if (d < 1 || d > kMaxDim) throw DomainError("dimension must be 1, 2 or 3");
    if (n < 3) throw DomainError("scale n must be at least 3");
    if (k_n < 1) throw DomainError("k_n must be positive");
    if (R < 1) throw DomainError("R must be at least 1");
    if (!(c2 * log_n() > 1.0))
        throw DomainError("quantile ladder needs c2 log n > 1");
    if (alpha1 < 0 || alpha2 < alpha1) throw DomainError("need 0 <= alpha1 <= alpha2");
    if (!(chi > 0 && chi < 1)) throw DomainError("chi must lie in (0,1)");
    if (iota <= 0) throw DomainError("iota must be positive");
}

QuantileTable estimate_quantiles_at_fraction(std::vector<double> xv_samples, double fraction,
                                             const ScaleParams& params, std::int64_t envs_used) {
    if (xv_samples.empty()) throw DomainError("quantile estimation needs samples");
    if (!(fraction > 0 && fraction <= 1)) throw DomainError("tail fraction must lie in (0,1]");
    QuantileTable out;
    out.c2 = params.c2;
    out.log_n = params.log_n();
    out.target_fraction = fraction;
    out.sample_count = std::int64_t(xv_samples.size());
    out.envs_used = envs_used;
    out.low_resolution = fraction < 1.0 / double(out.sample_count);
    out.order_index = std::min<std::int64_t>(
        out.sample_count,
        std::max<std::int64_t>(1, std::int64_t(std::ceil(fraction * double(out.sample_count)))));
    // p0 = order_index-th largest sample.
    auto nth = xv_samples.begin() + (out.order_index - 1);
    std::nth_element(xv_samples.begin(), nth, xv_samples.end(), std::greater<double>());
    out.p0 = *nth;
    return out;
}

QuantileTable estimate_quantiles(std::vector<double> xv_samples, const ScaleParams& params,
                                 std::int64_t envs_used) {
    params.validate();
    const double q = std::min(
        1.0, std::pow(double(params.n), -double(params.d)) *
                 std::pow(double(params.k_n), 2.0 * params.d) * params.log_n());
    if (!(q > 0)) throw DomainError("degenerate quantile target fraction");
    return estimate_quantiles_at_fraction(std::move(xv_samples), q, params, envs_used);
}

SiteSet IslandHierarchy::dlambda(double lam) const {
    std::vector<Site> out;
    const BoxSpec& box = lambda.box;
    for (std::int64_t i = 0; i < box.volume(); ++i)
        if (lambda_evaluated[static_cast<std::size_t>(i)] &&
            lambda.values[static_cast<std::size_t>(i)] > lam)
            out.push_back(box.site(i));
    return SiteSet::of(box.d, std::move(out));
}

IslandHierarchy level_sets(const ScalarField& xfield, const LambdaField& lfield,
                           const QuantileTable& quantiles, const ScaleParams& params,
                           std::vector<double> alphas) {
    if (!(xfield.box == lfield.lambda.box))
        throw DomainError("X field and lambda field boxes differ");
    params.validate();
    if (alphas.empty()) alphas = {0.0, params.alpha1, params.alpha2};

    IslandHierarchy h;
    h.params = params;
    h.quantiles = quantiles;
    h.lambda = lfield.lambda;
    h.lambda_evaluated = lfield.evaluated;
    h.lambda_complete = lfield.complete;

    const BoxSpec& box = xfield.box;
    for (double a : alphas) {
        const double pa = quantiles.p_alpha(a);
        std::vector<Site> members;
        for (std::int64_t i = 0; i < box.volume(); ++i) {
            const double x = xfield.log_domain
                                 ? std::exp(xfield.values[static_cast<std::size_t>(i)])
                                 : xfield.values[static_cast<std::size_t>(i)];
            if (x >= pa) members.push_back(box.site(i));
        }
        h.U[a] = SiteSet::of(box.d, std::move(members));
    }

    h.dstar_threshold = std::pow(quantiles.p_alpha(params.alpha1), 1.0 / double(params.k_n));
    std::vector<Site> dstar;
    for (std::int64_t i = 0; i < box.volume(); ++i)
        if (lfield.evaluated[static_cast<std::size_t>(i)] &&
            lfield.lambda.values[static_cast<std::size_t>(i)] >= h.dstar_threshold)
            dstar.push_back(box.site(i));
    h.dstar = SiteSet::of(box.d, std::move(dstar));
    return h;
}

void select_islands(IslandHierarchy& hier, const ClusterLabeling& clusters,
                    std::optional<std::int32_t> restrict_cluster) {
    const BoxSpec& box = hier.lambda.box;
    if (!(clusters.box == box)) throw DomainError("cluster labeling box differs");

    IslandSelection sel;
    sel.dn_radius = std::pow(hier.params.log_n(), hier.params.iota) * double(hier.params.k_n);
    sel.separation_radius =
        double(hier.params.n) * std::pow(double(hier.params.k_n), -14.0 * hier.params.d);

    std::int32_t cluster_id = -1;
    if (restrict_cluster)
        cluster_id = *restrict_cluster;
    else if (clusters.spanning_id)
        cluster_id = *clusters.spanning_id;

    if (cluster_id >= 0) {
        struct Cand {
            double lambda;
            Site site;
        };
        std::vector<Cand> cands;
        for (const Site& s : hier.dstar)
            if (clusters.label_of(s) == cluster_id)
                cands.push_back({hier.lambda.at(s), s});
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.lambda != b.lambda) return a.lambda > b.lambda;
            return a.site < b.site;
        });

        const double sep2 = 9.0 * hier.params.R * hier.params.R;  // (3R)^2
        for (const Cand& c : cands) {
            bool covered = false;
            for (const Site& v : sel.V)
                if (double(dist2(c.site, v)) <= sep2) {
                    covered = true;
                    break;
                }
            if (!covered) sel.V.push_back(c.site);
        }

        // A member may still see a strictly larger lambda inside its 3R
        // ball when that candidate was covered by a different member.
        for (const Site& v : sel.V) {
            const double lv = hier.lambda.at(v);
            for (const Cand& c : cands) {
                if (c.lambda <= lv) break;  // descending order
                if (double(dist2(c.site, v)) <= sep2) {
                    sel.localmax_violations.push_back(v);
                    break;
                }
            }
        }
    }

    // D_n: union of the localization balls, clipped to the box.
    std::vector<Site> dn;
    const double dnr2 = sel.dn_radius * sel.dn_radius;
    for (std::int64_t i = 0; i < box.volume(); ++i) {
        const Site s = box.site(i);
        for (const Site& v : sel.V)
            if (double(dist2(s, v)) <= dnr2) {
                dn.push_back(s);
                break;
            }
    }
    sel.dn = SiteSet::of(box.d, std::move(dn));

    std::vector<Site> pts = sel.V;
    pts.push_back(Site());  // island-to-origin spacing is part of the report
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const double min2 = sel.separation_radius * sel.separation_radius;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (double(dist2(pts[i], pts[j])) <= min2)
                sel.separation_violations.emplace_back(pts[i], pts[j]);

    hier.selection = std::move(sel);
}

SiteSet c_good_sites(const Environment& env, double c, const ScaleParams& params) {
    SurvivalQuery q;
    q.horizon = params.cgood_horizon();
    const ScalarField f = survival_final(env, q);
    std::vector<Site> good;
    for (std::int64_t i = 0; i < f.box.volume(); ++i) {
        const double v = f.log_domain ? std::exp(f.values[static_cast<std::size_t>(i)])
                                      : f.values[static_cast<std::size_t>(i)];
        if (v >= c) good.push_back(f.box.site(i));
    }
    return SiteSet::of(f.box.d, std::move(good));
}

double default_epsilon(int d, double c) {
    return std::min(c / 2.0, std::pow(2.0 * d, -std::pow(3.0, d + 1)));
}

namespace {

// Local double-box DP around one tile. Returns the tile score
// max_u [ g_{r^2-1}(u) + e_{r^2-1}(u) ] over open u in K_r(x) n box.
double tile_score(const Environment& env, Site x, std::int32_t r) {
    const int d = env.box().d;
    const std::int32_t side = 4 * r + 1;
    std::int64_t volume = 1;
    for (int a = 0; a < d; ++a) volume *= side;

    auto local_site = [&](std::int64_t idx) {
        Site s = x;
        for (int a = 0; a < d; ++a) {
            s.c[a] += std::int32_t(idx % side) - 2 * r;
            idx /= side;
        }
        return s;
    };

    std::vector<std::uint8_t> open(static_cast<std::size_t>(volume), 0);
    for (std::int64_t i = 0; i < volume; ++i)
        open[static_cast<std::size_t>(i)] = env.is_open(local_site(i)) ? 1 : 0;

    std::array<std::int64_t, kMaxDim> stride{};
    std::int64_t st = 1;
    for (int a = 0; a < d; ++a) {
        stride[a] = st;
        st *= side;
    }

    const double inv2d = 1.0 / double(2 * d);
    const std::int64_t horizon = std::int64_t(r) * r - 1;
    std::vector<double> g(static_cast<std::size_t>(volume)), gn(g.size());
    std::vector<double> e(static_cast<std::size_t>(volume), 0.0), en(e.size());
    for (std::int64_t i = 0; i < volume; ++i)
        g[static_cast<std::size_t>(i)] = open[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

    // Per-site constant: number of open-in-box neighbors outside K_2r(x).
    std::vector<double> exit_bonus(static_cast<std::size_t>(volume), 0.0);
    for (std::int64_t i = 0; i < volume; ++i) {
        if (!open[static_cast<std::size_t>(i)]) continue;
        const Site s = local_site(i);
        if (linf_dist(s, x) < 2 * r) continue;  // interior sites cannot exit in one step
        int count = 0;
        for (int a = 0; a < d; ++a)
            for (int dir = -1; dir <= 1; dir += 2) {
                Site nb = s;
                nb.c[a] += dir;
                if (linf_dist(nb, x) > 2 * r && env.is_open(nb)) ++count;
            }
        exit_bonus[static_cast<std::size_t>(i)] = double(count) * inv2d;
    }

    for (std::int64_t t = 0; t < horizon; ++t) {
        for (std::int64_t i = 0; i < volume; ++i) {
            if (!open[static_cast<std::size_t>(i)]) {
                gn[static_cast<std::size_t>(i)] = 0.0;
                en[static_cast<std::size_t>(i)] = 0.0;
                continue;
            }
            const Site s = local_site(i);
            double gs = 0.0, es = 0.0;
            for (int a = 0; a < d; ++a) {
                const std::int32_t off = s.c[a] - x.c[a];
                if (off > -2 * r) {
                    gs += g[static_cast<std::size_t>(i - stride[a])];
                    es += e[static_cast<std::size_t>(i - stride[a])];
                }
                if (off < 2 * r) {
                    gs += g[static_cast<std::size_t>(i + stride[a])];
                    es += e[static_cast<std::size_t>(i + stride[a])];
                }
            }
            gn[static_cast<std::size_t>(i)] = gs * inv2d;
            en[static_cast<std::size_t>(i)] = es * inv2d + exit_bonus[static_cast<std::size_t>(i)];
        }
        std::swap(g, gn);
        std::swap(e, en);
    }

    double best = 0.0;
    for (std::int64_t i = 0; i < volume; ++i) {
        const Site s = local_site(i);
        if (linf_dist(s, x) > r) continue;
        if (!env.box().contains(s) || !open[static_cast<std::size_t>(i)]) continue;
        best = std::max(best, g[static_cast<std::size_t>(i)] + e[static_cast<std::size_t>(i)]);
    }
    return best;
}

}  // namespace

Site FairBoxAnalysis::tile_center(Site v) const {
    // Unused axes fall out automatically: v and anchor are both 0 there,
    // so off = r maps to tile index 0.
    Site c = anchor;
    const std::int64_t w = 2 * std::int64_t(r) + 1;
    for (int a = 0; a < kMaxDim; ++a) {
        const std::int64_t off = std::int64_t(v.c[a]) - anchor.c[a] + r;
        const std::int64_t k = off >= 0 ? off / w : -((-off + w - 1) / w);
        c.c[a] = std::int32_t(anchor.c[a] + k * w);
    }
    return c;
}

std::int32_t FairBoxAnalysis::cluster_of(Site v) const {
    const Site c = tile_center(v);
    auto it = std::lower_bound(centers.begin(), centers.end(), c);
    if (it == centers.end() || *it != c) return -1;
    return cluster[static_cast<std::size_t>(it - centers.begin())];
}

std::vector<Site> FairBoxAnalysis::cluster_members(std::int32_t id) const {
    std::vector<Site> out;
    for (std::size_t i = 0; i < centers.size(); ++i)
        if (cluster[i] == id) out.push_back(centers[i]);
    return out;
}

FairBoxAnalysis epsilon_fair_analysis(const Environment& env, std::int32_t r, double eps,
                                      Site anchor) {
    if (r < 1) throw DomainError("fair-box radius must be at least 1");
    const BoxSpec& box = env.box();
    const int d = box.d;

    FairBoxAnalysis out;
    out.anchor = anchor;
    out.r = r;
    out.eps = eps;

    // Tiling centers whose K_r box meets the ambient box.
    const std::int64_t w = 2 * std::int64_t(r) + 1;
    std::array<std::vector<std::int32_t>, kMaxDim> axis_vals;
    for (int a = 0; a < kMaxDim; ++a) {
        if (a >= d) {
            axis_vals[a] = {0};
            continue;
        }
        const std::int64_t lo = box.origin.c[a] - box.half_width;
        const std::int64_t hi = box.origin.c[a] + box.half_width;
        // anchor + k w in [lo - r, hi + r]
        const std::int64_t klo = std::int64_t(std::ceil(double(lo - r - anchor.c[a]) / double(w)));
        const std::int64_t khi = std::int64_t(std::floor(double(hi + r - anchor.c[a]) / double(w)));
        for (std::int64_t k = klo; k <= khi; ++k)
            axis_vals[a].push_back(std::int32_t(anchor.c[a] + k * w));
    }
    for (std::int32_t x : axis_vals[0])
        for (std::int32_t y : axis_vals[1])
            for (std::int32_t z : axis_vals[2]) out.centers.push_back(Site(x, y, z));
    std::sort(out.centers.begin(), out.centers.end());

    const std::size_t nc = out.centers.size();
    out.fair.assign(nc, 0);
    out.score.assign(nc, 0.0);
    out.cluster.assign(nc, -1);
    for (std::size_t i = 0; i < nc; ++i) {
        out.score[i] = tile_score(env, out.centers[i], r);
        out.fair[i] = out.score[i] >= eps ? 1 : 0;
        if (out.fair[i]) ++out.fair_count;
    }

    // Face-adjacency clusters among fair tiles, ids in first-center order.
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < nc; ++i) {
        if (!out.fair[i] || out.cluster[i] >= 0) continue;
        const std::int32_t id = std::int32_t(out.cluster_sizes.size());
        std::int64_t count = 0;
        out.cluster[i] = id;
        stack.push_back(i);
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            ++count;
            for (int a = 0; a < d; ++a)
                for (int dir = -1; dir <= 1; dir += 2) {
                    Site nb = out.centers[cur];
                    nb.c[a] += dir * std::int32_t(w);
                    auto it = std::lower_bound(out.centers.begin(), out.centers.end(), nb);
                    if (it == out.centers.end() || *it != nb) continue;
                    const std::size_t j = std::size_t(it - out.centers.begin());
                    if (!out.fair[j] || out.cluster[j] >= 0) continue;
                    out.cluster[j] = id;
                    stack.push_back(j);
                }
        }
        out.cluster_sizes.push_back(count);
    }
    return out;
}

std::vector<Site> fair_cluster_near(const Environment& env, Site v, std::int32_t r, double eps,
                                    double radius) {
    FairBoxAnalysis fa = epsilon_fair_analysis(env, r, eps, v);
    // v's own tile is centered at v (anchor = v).
    auto it = std::lower_bound(fa.centers.begin(), fa.centers.end(), v);
    if (it == fa.centers.end() || *it != v) return {};
    if (!fa.fair[static_cast<std::size_t>(it - fa.centers.begin())]) return {};

    // Flood within the radius window only; the unrestricted cluster id may
    // join tiles through paths leaving the window.
    const double r2 = radius * radius;
    std::vector<Site> members;
    std::vector<Site> seen{v}, stack{v};
    const std::int32_t w = 2 * r + 1;
    while (!stack.empty()) {
        const Site cur = stack.back();
        stack.pop_back();
        members.push_back(cur);
        for (int a = 0; a < env.box().d; ++a)
            for (int dir = -1; dir <= 1; dir += 2) {
                Site nb = cur;
                nb.c[a] += dir * w;
                if (double(dist2(nb, v)) > r2) continue;
                auto jt = std::lower_bound(fa.centers.begin(), fa.centers.end(), nb);
                if (jt == fa.centers.end() || *jt != nb) continue;
                if (!fa.fair[static_cast<std::size_t>(jt - fa.centers.begin())]) continue;
                auto st = std::lower_bound(seen.begin(), seen.end(), nb);
                if (st != seen.end() && *st == nb) continue;
                seen.insert(st, nb);
                stack.push_back(nb);
            }
    }
    std::sort(members.begin(), members.end());
    return members;
}

GvReport g_event_report(const Environment& env, Site v, const ScaleParams& params, double c,
                        double alpha_c, double kappa) {
    const BoxSpec& box = env.box();
    if (!box.contains(v)) throw DomainError("site outside box");
    GvReport out;
    out.obstacle_threshold = alpha_c * std::pow(params.log_n(), 1.0 / params.d);
    out.cgood_bound = kappa * params.log_n();

    const SiteSet window = region(env, v, double(params.k_n), Norm::Linf);
    for (const Site& s : window) {
        const ObstacleDistance od = nearest_obstacle_distance(env, s);
        out.max_nearest_obstacle = std::max(out.max_nearest_obstacle, od.distance);
    }
    out.obstacles_dense = out.max_nearest_obstacle <= out.obstacle_threshold;

    const SiteSet good = c_good_sites(env, c, params);
    for (const Site& s : good)
        if (linf_dist(s, v) <= params.k_n) ++out.cgood_count;
    out.few_good = double(out.cgood_count) <= out.cgood_bound;
    out.holds = out.obstacles_dense && out.few_good;
    return out;
}

}  // namespace trapwalk
