#include "trapwalk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace trapwalk {

namespace {

// Component adjacency with the usual sentinel slot: neighbor lists index
// into the component, out-of-component edges point at slot N (value 0).
struct CompGraph {
    std::int64_t n = 0;
    int deg = 0;
    std::vector<std::int32_t> nbr;
    double inv2d = 0;

    CompGraph(const Environment& env, const std::vector<Site>& sites) {
        n = std::int64_t(sites.size());
        deg = 2 * env.box().d;
        inv2d = 1.0 / double(deg);
        nbr.assign(static_cast<std::size_t>(n) * deg, std::int32_t(n));
        for (std::int64_t i = 0; i < n; ++i) {
            int slot = 0;
            for (int a = 0; a < env.box().d; ++a) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    Site s = sites[static_cast<std::size_t>(i)];
                    s.c[a] += dir;
                    auto it = std::lower_bound(sites.begin(), sites.end(), s);
                    if (it != sites.end() && *it == s)
                        nbr[static_cast<std::size_t>(i) * deg + slot] =
                            std::int32_t(it - sites.begin());
                    ++slot;
                }
            }
        }
    }

    // y = P x; x and y have length n+1 with x[n] = 0.
    void apply(const double* x, double* y) const {
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int32_t* row = nbr.data() + static_cast<std::size_t>(i) * deg;
            double s = 0.0;
            for (int k = 0; k < deg; ++k) s += x[row[k]];
            y[i] = s * inv2d;
        }
        y[n] = 0.0;
    }
};

}  // namespace

SpectralResult principal_eigen(const Environment& env, const RestrictedComponent& comp,
                               const SpectralOptions& options) {
    const std::vector<Site>& sites = comp.sites.sites();
    if (sites.empty()) return SpectralResult{};  // empty operator: lambda 0, no eigenvector
    const std::int64_t n = std::int64_t(sites.size());
    CompGraph g(env, sites);

    std::vector<double> x(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> y(static_cast<std::size_t>(n + 1), 0.0);
    const double init = 1.0 / std::sqrt(double(n));
    for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = init;

    double lambda = 0;
    double best_residual = std::numeric_limits<double>::infinity();
    std::int64_t it = 0;
    for (; it < options.max_iterations; ++it) {
        g.apply(x.data(), y.data());
        // x is l2-normalized, so the Rayleigh quotient is just <x, y>.
        lambda = 0;
        for (std::int64_t i = 0; i < n; ++i)
            lambda += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
        double xmax = 0;
        double resid = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            xmax = std::max(xmax, std::abs(x[static_cast<std::size_t>(i)]));
            resid = std::max(resid, std::abs(y[static_cast<std::size_t>(i)] -
                                             lambda * x[static_cast<std::size_t>(i)]));
        }
        resid /= xmax;  // residual of the max-normalized eigenvector
        best_residual = std::min(best_residual, resid);
        if (resid <= options.tol) break;
        // Half-lazy update (P+I)/2 defeats the bipartite oscillation.
        double norm = 0;
        for (std::int64_t i = 0; i <= n; ++i) {
            x[static_cast<std::size_t>(i)] =
                0.5 * (x[static_cast<std::size_t>(i)] + y[static_cast<std::size_t>(i)]);
            norm += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        }
        norm = std::sqrt(norm);
        for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] /= norm;
    }
    if (it == options.max_iterations)
        throw ConvergenceError("power iteration did not reach tolerance", best_residual, it);

    SpectralResult out;
    out.iterations = it + 1;
    out.lambda = lambda;

    // Max-normalize and verify the residual with one explicit mat-vec.
    double xmax = 0;
    for (std::int64_t i = 0; i < n; ++i)
        xmax = std::max(xmax, x[static_cast<std::size_t>(i)]);
    out.eigvec.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out.eigvec[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] / xmax;
    std::vector<double> phi(static_cast<std::size_t>(n + 1), 0.0);
    std::copy(out.eigvec.begin(), out.eigvec.end(), phi.begin());
    g.apply(phi.data(), y.data());
    double resid = 0;
    for (std::int64_t i = 0; i < n; ++i)
        resid = std::max(resid, std::abs(y[static_cast<std::size_t>(i)] -
                                         out.lambda * phi[static_cast<std::size_t>(i)]));
    out.residual = resid;
    return out;
}

LambdaField lambda_field(const Environment& env, const SiteSet& target, double R,
                         const SpectralOptions& options) {
    const BoxSpec& box = env.box();
    LambdaField out;
    out.lambda.box = box;
    out.lambda.values.assign(static_cast<std::size_t>(box.volume()), 0.0);
    out.evaluated.assign(static_cast<std::size_t>(box.volume()), 0);
    out.radius = R;
    out.tol = options.tol;

    std::map<Site, std::vector<std::size_t>> buckets;  // component rep -> cache slots
    std::int64_t evaluated_count = 0;
    for (const Site& s : target) {
        if (!box.contains(s)) throw DomainError("lambda target outside box");
        const std::int64_t idx = box.index(s);
        if (out.evaluated[static_cast<std::size_t>(idx)]) continue;
        out.evaluated[static_cast<std::size_t>(idx)] = 1;
        ++evaluated_count;
        if (!env.is_open(s)) continue;  // lambda stays 0

        RestrictedComponent comp = restricted_component(env, s, R);
        const Site rep = comp.sites.sites().front();
        double lam = -1;
        auto& slots = buckets[rep];
        for (std::size_t slot : slots) {
            if (out.components[slot].sites == comp.sites.sites()) {
                lam = out.components[slot].lambda;
                break;
            }
        }
        if (lam < 0) {
            SpectralResult r = principal_eigen(env, comp, options);
            LambdaField::CacheEntry e;
            e.representative = rep;
            e.sites = comp.sites.sites();
            e.lambda = r.lambda;
            e.residual = r.residual;
            e.iterations = r.iterations;
            slots.push_back(out.components.size());
            out.components.push_back(std::move(e));
            lam = out.components.back().lambda;
        }
        out.lambda.values[static_cast<std::size_t>(idx)] = lam;
    }
    out.complete = evaluated_count == box.volume();
    return out;
}

}  // namespace trapwalk
