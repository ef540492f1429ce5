#pragma once

#include "trapwalk/lattice.hpp"
#include "trapwalk/percolation.hpp"

namespace trapwalk {

struct SpectralOptions {
    double tol = 1e-10;                      // on ||P phi - lambda phi||_inf
    std::int64_t max_iterations = 1000000;
};

// Principal eigenpair of the walk transition operator restricted to a
// component: P(x,y) = 1/(2d) for open neighbors x~y inside the component,
// symmetric and substochastic. The eigenvector is Perron (strictly positive
// on the component) and normalized to unit maximum.
struct SpectralResult {
    double lambda = 0;
    std::vector<double> eigvec;  // aligned with component site order
    double residual = 0;         // ||P phi - lambda phi||_inf, verified by an explicit mat-vec
    std::int64_t iterations = 0;
};

// Power iteration on the half-lazy operator (P+I)/2, which kills the
// bipartite +-lambda oscillation; lambda is mapped back afterwards.
// Throws ConvergenceError (carrying the best residual) when the tolerance
// is not met within max_iterations.
SpectralResult principal_eigen(const Environment& env, const RestrictedComponent& comp,
                               const SpectralOptions& options = {});

// lambda_v over a target set of sites; closed sites get 0. Results are
// cached per component, keyed by the component's lexicographically smallest
// site (with an exact site-set equality check inside each key bucket), so
// sites sharing an identical restricted component reuse one result
// bit-exactly.
struct LambdaField {
    ScalarField lambda;                  // 0 on closed sites; valid where evaluated
    std::vector<std::uint8_t> evaluated;
    double radius = 0;
    double tol = 0;
    bool complete = false;               // every box site evaluated

    struct CacheEntry {
        Site representative;
        std::vector<Site> sites;
        double lambda;
        double residual;
        std::int64_t iterations;
    };
    std::vector<CacheEntry> components;  // one per distinct component seen

    double at(Site s) const { return lambda.at(s); }
    bool is_evaluated(Site s) const {
        return lambda.box.contains(s) &&
               evaluated[static_cast<std::size_t>(lambda.box.index(s))] != 0;
    }
};

LambdaField lambda_field(const Environment& env, const SiteSet& target, double R,
                         const SpectralOptions& options = {});

}  // namespace trapwalk
