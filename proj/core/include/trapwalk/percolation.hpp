#pragma once

#include <optional>

#include "trapwalk/lattice.hpp"

namespace trapwalk {

// Connected components of the open subgraph. Cluster ids are assigned in
// order of each cluster's first site in index order, so labelings are
// deterministic. The spanning cluster is the largest one touching a pair of
// opposite box faces (smallest id on ties).
struct ClusterLabeling {
    BoxSpec box;
    std::vector<std::int32_t> label;  // -1 on closed sites
    std::vector<std::int64_t> sizes;  // indexed by cluster id
    std::optional<std::int32_t> spanning_id;

    std::int32_t cluster_count() const { return std::int32_t(sizes.size()); }

    // -1 for closed or out-of-box sites.
    std::int32_t label_of(Site s) const {
        if (!box.contains(s)) return -1;
        return label[static_cast<std::size_t>(box.index(s))];
    }
};

ClusterLabeling label_clusters(const Environment& env);

// Graph distance within the open subgraph; nullopt when u and v are not
// connected (or either is closed).
std::optional<std::int64_t> chemical_distance(const Environment& env, Site u, Site v);

// Connected component of v inside the Euclidean ball B_R(v), restricted to
// open sites. Empty when v is closed.
struct RestrictedComponent {
    Site center;
    double radius = 0;
    SiteSet sites;
};

RestrictedComponent restricted_component(const Environment& env, Site v, double R);

// Euclidean distance from u to the nearest obstacle, where every site
// outside the box counts as an obstacle. Ties are broken by lexicographic
// site order; the witness may therefore be a boundary-frame site.
struct ObstacleDistance {
    double distance = 0;
    std::int64_t dist2 = 0;
    Site witness{};
};

ObstacleDistance nearest_obstacle_distance(const Environment& env, Site u);

}  // namespace trapwalk
