#include "trapwalk/walker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace trapwalk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Walk segment represented by a stack entry: the stored loop when one has
// been attached, otherwise the bare site. Segments concatenate to the
// original walk.
void append_expansion(Path& out, const Site& site, const Path& loop) {
    if (loop.empty())
        out.push_back(site);
    else
        out.insert(out.end(), loop.begin(), loop.end());
}

}  // namespace

Path LoopDecomposition::reconstruct() const {
    Path out;
    for (std::size_t i = 0; i < eta.size(); ++i) append_expansion(out, eta[i], loops[i]);
    return out;
}

LoopDecomposition loop_erase(const Path& walk) {
    LoopDecomposition out;
    if (walk.empty()) return out;

    std::map<Site, std::size_t> pos;  // site -> stack index while on the stack
    out.eta.push_back(walk[0]);
    out.loops.emplace_back();
    pos[walk[0]] = 0;

    for (std::size_t t = 1; t < walk.size(); ++t) {
        const Site s = walk[t];
        auto it = pos.find(s);
        if (it == pos.end()) {
            pos[s] = out.eta.size();
            out.eta.push_back(s);
            out.loops.emplace_back();
            continue;
        }
        // Revisit: everything above position j plus this step is one loop.
        const std::size_t j = it->second;
        Path merged;
        append_expansion(merged, out.eta[j], out.loops[j]);
        for (std::size_t k = j + 1; k < out.eta.size(); ++k) {
            append_expansion(merged, out.eta[k], out.loops[k]);
            pos.erase(out.eta[k]);
        }
        merged.push_back(s);
        out.loops[j] = std::move(merged);
        out.eta.resize(j + 1);
        out.loops.resize(j + 1);
    }
    return out;
}

namespace {

struct StepContext {
    const Environment* env;
    const SurvivalField* field;
    BoxStencil stencil;
    bool log_dom;
    double inv2d;
    double log_inv2d;
    double tol;

    StepContext(const Environment& e, const SurvivalField& f)
        : env(&e), field(&f), stencil(e.box()),
          log_dom(f.domain() == ValueDomain::Log),
          inv2d(1.0 / double(2 * e.box().d)),
          log_inv2d(std::log(1.0 / double(2 * e.box().d))),
          // The one-step ratios satisfy sum_y p(y) = 1 exactly in real
          // arithmetic (it is the DP recursion read backwards); rounding
          // leaves ~1e-15 in linear domain and ~1e-10 after exp in log
          // domain. Anything worse is a bug.
          tol(f.domain() == ValueDomain::Log ? 1e-9 : 1e-12) {}

    // Transition probabilities out of site index i at walk time t (field
    // levels h_{n-t} / h_{n-t-1} provided by the caller).
    void probs(std::span<const double> h_now, std::span<const double> h_next, std::int64_t i,
               std::array<double, 2 * kMaxDim>& p) const {
        const int deg = 2 * stencil.d;
        const std::int32_t* row = stencil.row(i);
        double total = 0;
        for (int k = 0; k < deg; ++k) {
            double w;
            if (log_dom) {
                const double num = h_next[static_cast<std::size_t>(row[k])];
                w = num == kNegInf
                        ? 0.0
                        : std::exp(num + log_inv2d - h_now[static_cast<std::size_t>(i)]);
            } else {
                w = h_next[static_cast<std::size_t>(row[k])] * inv2d /
                    h_now[static_cast<std::size_t>(i)];
            }
            if (w < 0 || w > 1 + tol)
                throw ConsistencyError("transition ratio outside [0,1]");
            p[static_cast<std::size_t>(k)] = std::min(w, 1.0);
            total += p[static_cast<std::size_t>(k)];
        }
        if (std::abs(total - 1.0) > double(deg) * tol)
            throw ConsistencyError("transition ratios do not sum to one");
    }

    int draw(const std::array<double, 2 * kMaxDim>& p, RngStream& rng) const {
        const int deg = 2 * stencil.d;
        const double u = rng.next_unit();
        double acc = 0;
        int last_positive = -1;
        for (int k = 0; k < deg; ++k) {
            if (p[static_cast<std::size_t>(k)] <= 0) continue;
            last_positive = k;
            acc += p[static_cast<std::size_t>(k)];
            if (u < acc) return k;
        }
        // Rounding gap at the top of the cumulative sum; give it to the
        // last positive slot so the draw stays deterministic.
        if (last_positive < 0) throw ConsistencyError("no admissible step from a surviving site");
        return last_positive;
    }
};

void check_sampling_pre(const Environment& env, Site start, const SurvivalField& field) {
    if (!(field.box() == env.box())) throw DomainError("field box does not match environment");
    if (!env.box().contains(start)) throw DomainError("start outside box");
    if (field.log_value(field.horizon(), start) == kNegInf)
        throw NoSurvivingPath("no surviving path from this start");
}

}  // namespace

Path sample_conditioned(const Environment& env, Site start, const SurvivalField& field,
                        RngStream& rng) {
    check_sampling_pre(env, start, field);
    const std::int64_t n = field.horizon();
    StepContext ctx(env, field);
    auto cursor = field.cursor();

    Path path;
    path.reserve(static_cast<std::size_t>(n + 1));
    path.push_back(start);
    std::int64_t i = env.box().index(start);
    std::array<double, 2 * kMaxDim> p{};
    for (std::int64_t t = 0; t < n; ++t) {
        const auto [h_now, h_next] = cursor.pair(n - t);
        ctx.probs(h_now, h_next, i, p);
        const int k = ctx.draw(p, rng);
        i = ctx.stencil.row(i)[k];
        path.push_back(env.box().site(i));
    }
    return path;
}

std::vector<Path> sample_conditioned_batch(const Environment& env, Site start,
                                           const SurvivalField& field, std::uint64_t master_seed,
                                           std::int64_t count) {
    if (count < 0) throw DomainError("path count must be non-negative");
    // One engine per path keeps batch output identical to the sequential
    // sampler; engines are a few KiB each.
    if (count > 200000) throw CapacityError("batch too large; sample in chunks");
    check_sampling_pre(env, start, field);
    const std::int64_t n = field.horizon();
    StepContext ctx(env, field);
    auto cursor = field.cursor();

    std::vector<RngStream> rngs;
    rngs.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k)
        rngs.push_back(RngStream::substream(master_seed, std::uint64_t(k)));

    std::vector<Path> paths(static_cast<std::size_t>(count));
    std::vector<std::int64_t> at(static_cast<std::size_t>(count), env.box().index(start));
    for (auto& path : paths) {
        path.reserve(static_cast<std::size_t>(n + 1));
        path.push_back(start);
    }
    std::array<double, 2 * kMaxDim> p{};
    // Lockstep over time so each checkpoint block is replayed once for the
    // whole batch rather than once per path.
    for (std::int64_t t = 0; t < n; ++t) {
        const auto [h_now, h_next] = cursor.pair(n - t);
        for (std::int64_t k = 0; k < count; ++k) {
            ctx.probs(h_now, h_next, at[static_cast<std::size_t>(k)], p);
            const int step = ctx.draw(p, rngs[static_cast<std::size_t>(k)]);
            at[static_cast<std::size_t>(k)] =
                ctx.stencil.row(at[static_cast<std::size_t>(k)])[step];
            paths[static_cast<std::size_t>(k)].push_back(
                env.box().site(at[static_cast<std::size_t>(k)]));
        }
    }
    return paths;
}

double doob_log_path_probability(const Environment& env, const Path& path,
                                 const SurvivalField& field) {
    if (path.empty()) throw DomainError("empty path");
    if (std::int64_t(path.size()) != field.horizon() + 1)
        throw DomainError("path length does not match field horizon");
    check_sampling_pre(env, path[0], field);
    const std::int64_t n = field.horizon();
    StepContext ctx(env, field);
    auto cursor = field.cursor();

    double log_p = 0;
    std::int64_t i = env.box().index(path[0]);
    std::array<double, 2 * kMaxDim> p{};
    for (std::int64_t t = 0; t < n; ++t) {
        const auto [h_now, h_next] = cursor.pair(n - t);
        ctx.probs(h_now, h_next, i, p);
        const std::int32_t* row = ctx.stencil.row(i);
        int k = -1;
        const std::int64_t want = env.box().contains(path[static_cast<std::size_t>(t + 1)])
                                      ? env.box().index(path[static_cast<std::size_t>(t + 1)])
                                      : -1;
        for (int c = 0; c < 2 * ctx.stencil.d; ++c)
            if (row[c] == want && want >= 0) {
                k = c;
                break;
            }
        if (k < 0) throw DomainError("path steps to a non-neighbor");
        if (p[static_cast<std::size_t>(k)] <= 0) return kNegInf;
        log_p += std::log(p[static_cast<std::size_t>(k)]);
        i = want;
    }
    return log_p;
}

PathMarkers path_markers(const Path& path, const LambdaField& lfield,
                         const IslandHierarchy& hier) {
    PathMarkers out;
    if (path.empty()) return out;
    const BoxSpec& box = hier.lambda.box;

    for (const Site& s : path)
        if (hier.dstar.contains(s)) {
            out.dstar_visited = true;
            break;
        }

    if (out.dstar_visited) {
        double best = kNegInf;
        for (std::size_t t = 0; t < path.size(); ++t) {
            const Site s = path[t];
            double lam = 0;
            if (box.contains(s) && lfield.is_evaluated(s)) lam = lfield.at(s);
            if (lam > best) {
                best = lam;
                out.tstar = std::int64_t(t);
            }
        }
        const Site st = path[static_cast<std::size_t>(out.tstar)];
        const double cover2 = 9.0 * hier.params.R * hier.params.R;
        bool found = false;
        for (const Site& v : hier.selection.V) {
            if (double(dist2(st, v)) > cover2) continue;
            ++out.vstar_ties;
            if (!found || v < out.vstar) {
                out.vstar = v;
                found = true;
            }
        }
        out.vstar_uncovered = !found;
    } else {
        out.vstar_uncovered = true;
    }

    const double entry_r = std::pow(hier.params.log_n(), hier.params.iota);
    const double entry_r2 = entry_r * entry_r;
    for (std::size_t vi = 0; vi < hier.selection.V.size(); ++vi) {
        const Site v = hier.selection.V[vi];
        for (std::size_t t = 0; t < path.size(); ++t)
            if (double(dist2(path[t], v)) <= entry_r2) {
                out.island_hits[std::int64_t(vi)] = std::int64_t(t);
                break;
            }
    }
    return out;
}

LoopTaxonomy loop_taxonomy(const LoopDecomposition& decomp, const Environment& env,
                           std::int64_t t) {
    if (t < 0) throw DomainError("loop length must be non-negative");
    LoopTaxonomy out;
    out.t = t;

    std::vector<std::uint8_t> in_m(decomp.eta.size(), 0);
    if (t <= 1) {
        // The survival threshold degenerates below t = 2; every open site
        // counts as well-surviving there.
        out.threshold = 0.0;
        for (std::size_t i = 0; i < decomp.eta.size(); ++i)
            in_m[i] = env.is_open(decomp.eta[i]) ? 1 : 0;
    } else {
        const double lt = std::log(double(t));
        out.threshold = std::exp(-double(t) / (lt * lt));
        SurvivalQuery q;
        q.horizon = t;
        const ScalarField f = survival_final(env, q);
        for (std::size_t i = 0; i < decomp.eta.size(); ++i) {
            const Site s = decomp.eta[i];
            if (!f.box.contains(s)) continue;
            const double x = f.log_domain ? std::exp(f.at(s)) : f.at(s);
            in_m[i] = x >= out.threshold ? 1 : 0;
        }
    }
    out.m_mask = in_m;

    for (std::size_t i = 0; i < decomp.loops.size(); ++i) {
        const std::int64_t steps =
            decomp.loops[i].empty() ? 0 : std::int64_t(decomp.loops[i].size()) - 1;
        if (steps == t && !in_m[i]) out.a_t.push_back(std::int64_t(i));
    }
    return out;
}

}  // namespace trapwalk
