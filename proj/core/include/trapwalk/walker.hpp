#pragma once

#include "trapwalk/islands.hpp"
#include "trapwalk/lattice.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/spectral.hpp"
#include "trapwalk/survival.hpp"

namespace trapwalk {

using Path = std::vector<Site>;

// Chronological loop erasure. eta is the erased (self-avoiding) trajectory;
// loops[i] is the loop attached at eta[i], stored with matching endpoints
// ([a, ..., a]) or empty. Concatenating expansions reconstructs the walk.
struct LoopDecomposition {
    Path eta;
    std::vector<Path> loops;  // size == eta.size()

    Path reconstruct() const;
};

LoopDecomposition loop_erase(const Path& walk);

// One trajectory of the walk conditioned to survive to the field's horizon,
// sampled by the h-transform: from x at time t, step to open neighbor y with
// probability (1/2d) h_{n-t-1}(y) / h_{n-t}(x). Start must satisfy h_n > 0.
Path sample_conditioned(const Environment& env, Site start, const SurvivalField& field,
                        RngStream& rng);

// Lockstep batch: all paths advance one step per field level, so a
// checkpointed field replays each block once for the whole batch. Path k
// uses substream(master_seed, k).
std::vector<Path> sample_conditioned_batch(const Environment& env, Site start,
                                           const SurvivalField& field, std::uint64_t master_seed,
                                           std::int64_t count);

// log of the conditional probability of a specific surviving path, via the
// telescoping h-ratios. Throws ConsistencyError if any ratio leaves [0,1]
// by more than 1e-12.
double doob_log_path_probability(const Environment& env, const Path& path,
                                 const SurvivalField& field);

struct PathMarkers {
    bool dstar_visited = false;
    std::int64_t tstar = -1;        // first argmax of lambda along the path (valid if dstar_visited)
    Site vstar{};                   // island whose 3R ball contains S_{t*}
    bool vstar_uncovered = false;   // no island qualified; vstar is meaningless then
    std::int64_t vstar_ties = 0;    // islands at the same covering distance criterion
    std::map<std::int64_t, std::int64_t> island_hits;  // index into V -> T(v), first entry time
};

// t* / v* / T(v) markers of a sampled path against a hierarchy. T(v) is the
// first time the path comes within (log n)^iota of v.
PathMarkers path_markers(const Path& path, const LambdaField& lfield, const IslandHierarchy& hier);

// Loop census at length t: which loops of the decomposition have length t
// and are attached at sites outside M(t) = {v : X_v(t) >= e^{-t/(log t)^2}},
// where X_v(t) is the t-step survival probability from v. For t in {0, 1}
// the threshold degenerates and M(t) is taken to be every open site.
struct LoopTaxonomy {
    std::int64_t t = 0;
    double threshold = 0;
    std::vector<std::uint8_t> m_mask;       // per decomposition index: eta[i] in M(t)
    std::vector<std::int64_t> a_t;          // indices i with |loop path| == t and eta[i] not in M(t)
};

LoopTaxonomy loop_taxonomy(const LoopDecomposition& decomp, const Environment& env,
                           std::int64_t t);

}  // namespace trapwalk
