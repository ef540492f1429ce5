#pragma once

#include <map>

#include "trapwalk/lattice.hpp"
#include "trapwalk/percolation.hpp"
#include "trapwalk/spectral.hpp"
#include "trapwalk/survival.hpp"

namespace trapwalk {

// Scale constants tied to the box scale n. All logs are natural. The k_n and
// R defaults follow the asymptotic recipe; at desk scale they are usually
// overridden, and consumers record when that happened.
struct ScaleParams {
    int d = 2;
    std::int64_t n = 0;
    std::int64_t k_n = 0;   // survival horizon scale
    double R = 0;           // eigenvalue localization radius
    double alpha1 = 6;      // 3d
    double alpha2 = 8;      // 4d
    double c2 = 1.0;        // quantile ladder base
    double iota = 2.0;      // island ball exponent
    double chi = 0.25;      // tail study constant

    // d = 2: floor((log n)^3 (log log n)^2); d >= 3: floor((log n)^{4-2/d}).
    // d = 1 is a documented test dimension and uses the d >= 3 formula at
    // d = 1, i.e. floor((log n)^2).
    static std::int64_t default_k_n(int d, std::int64_t n);
    static double default_R(std::int64_t k_n, std::int64_t n);  // floor(k_n (log n)^2)
    static ScaleParams for_scale(int d, std::int64_t n);

    double log_n() const { return std::log(double(n)); }
    double beta_chi() const;                 // chi^{k_n / (log n)^{2/d}}
    std::int64_t cgood_horizon() const;      // floor((log n)^{2/d})
    void validate() const;
};

// Empirical quantile ladder p_alpha = p0 / (c2 log n)^alpha. p0 is the
// largest sample value whose empirical tail fraction still meets the target
// n^{-d} k_n^{2d} log n (clamped into (0,1]).
struct QuantileTable {
    double p0 = 0;
    double c2 = 1;
    double log_n = 0;
    double target_fraction = 0;
    std::int64_t sample_count = 0;
    std::int64_t order_index = 0;  // p0 is the order_index-th largest sample (1-based)
    std::int64_t envs_used = 0;
    bool low_resolution = false;   // target fraction below 1/sample_count

    double p_alpha(double alpha) const { return p0 / std::pow(c2 * log_n, alpha); }
};

// Order-statistic estimate at an explicit tail fraction.
QuantileTable estimate_quantiles_at_fraction(std::vector<double> xv_samples, double fraction,
                                             const ScaleParams& params, std::int64_t envs_used = 0);
QuantileTable estimate_quantiles(std::vector<double> xv_samples, const ScaleParams& params,
                                 std::int64_t envs_used = 0);

struct IslandSelection {
    std::vector<Site> V;           // greedy 3R-separated island centers, lambda-descending
    SiteSet dn;                    // union of B_{(log n)^iota k_n}(v) over V, clipped to box
    double dn_radius = 0;
    double separation_radius = 0;  // n k_n^{-14d}
    std::vector<std::pair<Site, Site>> separation_violations;  // pairs of V u {0} closer than that
    // Members whose 3R ball contains a strictly larger lambda. The greedy
    // cover guarantees every candidate is within 3R of some member; at desk
    // scale that can clash with local maximality, so the clash is reported
    // rather than hidden.
    std::vector<Site> localmax_violations;
};

struct IslandHierarchy {
    ScaleParams params;
    QuantileTable quantiles;
    std::map<double, SiteSet> U;   // alpha -> {v : X_v >= p_alpha}
    double dstar_threshold = 0;    // p_{alpha1}^{1/k_n}
    SiteSet dstar;                 // lambda_v >= threshold (non-strict by definition)
    ScalarField lambda;            // copy of the lambda field values
    std::vector<std::uint8_t> lambda_evaluated;
    bool lambda_complete = false;
    IslandSelection selection;     // filled by select_islands

    // {v : lambda_v > lam}, strict by definition (contrast with dstar).
    SiteSet dlambda(double lam) const;
};

// U_alpha level sets (for the given alphas, default {0, alpha1, alpha2}) and
// D_* from an X field and a lambda field over the same box.
IslandHierarchy level_sets(const ScalarField& xfield, const LambdaField& lfield,
                           const QuantileTable& quantiles, const ScaleParams& params,
                           std::vector<double> alphas = {});

// Greedy island selection over D_* ∩ cluster ∩ box in decreasing lambda
// order (lexicographic ties), covering every candidate within distance 3R.
// `restrict_cluster` defaults to the spanning cluster; with no spanning
// cluster and no override the selection is empty.
void select_islands(IslandHierarchy& hier, const ClusterLabeling& clusters,
                    std::optional<std::int32_t> restrict_cluster = std::nullopt);

// Sites v with P^v(tau > floor((log n)^{2/d})) >= c.
SiteSet c_good_sites(const Environment& env, double c, const ScaleParams& params);

// Default fairness threshold: min(c/2, (2d)^{-3^{d+1}}).
double default_epsilon(int d, double c);

// Tiling boxes K_r(x) = {y : |x-y|_inf <= r}, x in anchor + (2r+1) Z^d. A box
// is eps-fair when some member u satisfies
//   P^u(tau >= r^2  or  the walk exits K_{2r}(x) strictly before tau) >= eps,
// computed exactly by a confined r^2-step recursion with escape bookkeeping.
// Fair boxes are clustered by face adjacency of the tiling.
struct FairBoxAnalysis {
    Site anchor{};
    std::int32_t r = 0;
    double eps = 0;
    std::vector<Site> centers;         // all tiling centers meeting the box, lex order
    std::vector<std::uint8_t> fair;
    std::vector<double> score;         // max_u of the fairness probability
    std::vector<std::int32_t> cluster; // cluster id among fair boxes, -1 otherwise
    std::vector<std::int64_t> cluster_sizes;
    std::int64_t fair_count = 0;

    // Center of the tile containing site v.
    Site tile_center(Site v) const;
    std::int32_t cluster_of(Site v) const;                 // via the containing tile
    std::vector<Site> cluster_members(std::int32_t id) const;
};

FairBoxAnalysis epsilon_fair_analysis(const Environment& env, std::int32_t r, double eps,
                                      Site anchor);

// L_v: the cluster of eps-fair boxes containing v's own box, in the tiling
// anchored at v, restricted to centers within `radius` of v. Empty when
// K_r(v) itself is not fair.
std::vector<Site> fair_cluster_near(const Environment& env, Site v, std::int32_t r, double eps,
                                    double radius);

// Diagnostic for the dense-obstacle / few-good-sites event around v: every
// site of K_{k_n}(v) has an obstacle within alpha_c (log n)^{1/d}, and the
// number of c-good sites in K_{k_n}(v) is at most kappa log n.
struct GvReport {
    double max_nearest_obstacle = 0;
    double obstacle_threshold = 0;
    bool obstacles_dense = false;
    std::int64_t cgood_count = 0;
    double cgood_bound = 0;
    bool few_good = false;
    bool holds = false;
};

GvReport g_event_report(const Environment& env, Site v, const ScaleParams& params, double c,
                        double alpha_c, double kappa);

}  // namespace trapwalk
