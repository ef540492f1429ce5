#include "trapwalk/percolation.hpp"

#include <algorithm>
#include <queue>

namespace trapwalk {

ClusterLabeling label_clusters(const Environment& env) {
    const BoxSpec& box = env.box();
    const std::int64_t n = box.volume();
    BoxStencil st(box);

    ClusterLabeling out;
    out.box = box;
    out.label.assign(static_cast<std::size_t>(n), -1);

    std::vector<std::int64_t> stack;
    for (std::int64_t i = 0; i < n; ++i) {
        if (!env.is_open_index(i) || out.label[static_cast<std::size_t>(i)] >= 0) continue;
        const std::int32_t id = std::int32_t(out.sizes.size());
        std::int64_t count = 0;
        stack.push_back(i);
        out.label[static_cast<std::size_t>(i)] = id;
        while (!stack.empty()) {
            const std::int64_t cur = stack.back();
            stack.pop_back();
            ++count;
            const std::int32_t* row = st.row(cur);
            for (int k = 0; k < 2 * st.d; ++k) {
                const std::int64_t nb = row[k];
                if (nb == st.volume) continue;
                if (!env.is_open_index(nb)) continue;
                auto& lab = out.label[static_cast<std::size_t>(nb)];
                if (lab >= 0) continue;
                lab = id;
                stack.push_back(nb);
            }
        }
        out.sizes.push_back(count);
    }

    // Spanning cluster: touches both faces of some axis; largest wins,
    // smallest id on ties.
    const std::int32_t nc = out.cluster_count();
    if (nc > 0) {
        std::vector<std::uint8_t> lo_face(static_cast<std::size_t>(nc) * box.d, 0);
        std::vector<std::uint8_t> hi_face(static_cast<std::size_t>(nc) * box.d, 0);
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int32_t id = out.label[static_cast<std::size_t>(i)];
            if (id < 0) continue;
            const Site s = box.site(i);
            for (int a = 0; a < box.d; ++a) {
                if (s.c[a] - box.origin.c[a] == -box.half_width)
                    lo_face[std::size_t(id) * box.d + a] = 1;
                if (s.c[a] - box.origin.c[a] == box.half_width)
                    hi_face[std::size_t(id) * box.d + a] = 1;
            }
        }
        std::int64_t best_size = 0;
        for (std::int32_t id = 0; id < nc; ++id) {
            bool spans = false;
            for (int a = 0; a < box.d && !spans; ++a)
                spans = lo_face[std::size_t(id) * box.d + a] && hi_face[std::size_t(id) * box.d + a];
            if (spans && out.sizes[static_cast<std::size_t>(id)] > best_size) {
                best_size = out.sizes[static_cast<std::size_t>(id)];
                out.spanning_id = id;
            }
        }
    }
    return out;
}

std::optional<std::int64_t> chemical_distance(const Environment& env, Site u, Site v) {
    if (!env.is_open(u) || !env.is_open(v)) return std::nullopt;
    const BoxSpec& box = env.box();
    if (u == v) return 0;
    BoxStencil st(box);
    std::vector<std::int64_t> dist(static_cast<std::size_t>(box.volume()), -1);
    std::queue<std::int64_t> q;
    const std::int64_t src = box.index(u), dst = box.index(v);
    dist[static_cast<std::size_t>(src)] = 0;
    q.push(src);
    while (!q.empty()) {
        const std::int64_t cur = q.front();
        q.pop();
        const std::int32_t* row = st.row(cur);
        for (int k = 0; k < 2 * st.d; ++k) {
            const std::int64_t nb = row[k];
            if (nb == st.volume || !env.is_open_index(nb)) continue;
            if (dist[static_cast<std::size_t>(nb)] >= 0) continue;
            dist[static_cast<std::size_t>(nb)] = dist[static_cast<std::size_t>(cur)] + 1;
            if (nb == dst) return dist[static_cast<std::size_t>(nb)];
            q.push(nb);
        }
    }
    return std::nullopt;
}

RestrictedComponent restricted_component(const Environment& env, Site v, double R) {
    RestrictedComponent out;
    out.center = v;
    out.radius = R;
    if (!env.is_open(v)) return out;

    const std::int64_t r2_cap = std::int64_t(R * R + 1e-9);
    std::vector<Site> found;
    std::vector<Site> stack{v};
    // Visited set tracked by sorted insertion; component sizes are O(R^d).
    std::vector<Site> seen{v};
    auto mark = [&seen](Site s) {
        auto it = std::lower_bound(seen.begin(), seen.end(), s);
        if (it != seen.end() && *it == s) return false;
        seen.insert(it, s);
        return true;
    };
    while (!stack.empty()) {
        const Site cur = stack.back();
        stack.pop_back();
        found.push_back(cur);
        for (int a = 0; a < env.box().d; ++a) {
            for (int dir = -1; dir <= 1; dir += 2) {
                Site nb = cur;
                nb.c[a] += dir;
                if (dist2(nb, v) > r2_cap) continue;
                if (!env.is_open(nb)) continue;
                if (mark(nb)) stack.push_back(nb);
            }
        }
    }
    out.sites = SiteSet::of(env.box().d, std::move(found));
    return out;
}

ObstacleDistance nearest_obstacle_distance(const Environment& env, Site u) {
    const BoxSpec& box = env.box();
    if (!box.contains(u)) throw DomainError("query site outside box");

    // Expand l-inf shells; the first shell holding an obstacle bounds the
    // true l2 minimum by shell <= l2 < shell * sqrt(d), so scanning up to
    // ceil(best l2) after the first hit is exact.
    ObstacleDistance best;
    best.dist2 = -1;
    const std::int32_t side_reach = 2 * box.half_width + 1;  // frame is always reachable
    auto consider = [&](Site s) {
        if (env.is_open(s)) return;
        const std::int64_t d2 = dist2(s, u);
        if (best.dist2 < 0 || d2 < best.dist2 || (d2 == best.dist2 && s < best.witness)) {
            best.dist2 = d2;
            best.witness = s;
        }
    };
    for (std::int32_t r = 0; r <= side_reach; ++r) {
        if (best.dist2 >= 0 && std::int64_t(r) * r > best.dist2) break;
        // All sites at l-inf distance exactly r from u.
        SiteSet shell_ball = region(u, r, Norm::Linf, box.d);
        for (const Site& s : shell_ball)
            if (linf_dist(s, u) == r) consider(s);
    }
    best.distance = std::sqrt(double(best.dist2));
    return best;
}

}  // namespace trapwalk
