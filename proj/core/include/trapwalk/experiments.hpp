#pragma once

#include <filesystem>
#include <string>

#include "trapwalk/islands.hpp"
#include "trapwalk/spectral.hpp"
#include "trapwalk/walker.hpp"

namespace trapwalk {

inline constexpr const char* kTrapwalkVersion = "1.0.0";

// Continuum constants for the survival decay rate
//   c* = mu_B (omega_d log(1/p) / d)^{2/d},  mu_B = lambda_Dir(unit ball)/(2d).
// log(1/p), not log p: the rate must be positive for p < 1.
double mu_ball(int d);
double unit_ball_volume(int d);
double compute_cstar(int d, double p);

struct EnvBatchSpec {
    int d = 2;
    std::int32_t half_width = 10;
    double p = 0.5;
    std::uint64_t seed0 = 0;
    std::int64_t count = 1;
};

struct ExperimentConfig {
    std::string name;
    EnvBatchSpec batch;
    ScaleParams params;          // derived from (d, n) unless overridden
    bool params_overridden = false;

    std::vector<double> beta_grid;        // tail: thresholds in (0, 1]
    std::int64_t sample_paths = 200;      // localization: conditioned paths per environment
    std::uint64_t sample_seed = 1;
    double entry_speed_c = 2.0;           // localization: reported fraction T(v*) <= c |S_T|
    std::vector<std::int64_t> n_grid;     // asymptotics: horizons, increasing, >= 2
    std::vector<std::int64_t> m_grid;     // inequalities: horizons
    std::vector<double> alpha_grid;       // inequalities: quantile ladder levels
    std::int64_t site_sample = 32;        // inequalities: start sites per environment
    double rho = 2.0;                     // inequalities: reported constant of the loop bound
    SpectralOptions spectral;

    std::string output_dir;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& file);
std::string experiment_config_json(const ExperimentConfig& cfg);  // canonical echo

// Tables carry preformatted cells; floats go through format_g17 exactly once,
// so a rerun with the same config reproduces the CSV byte for byte.
std::string format_g17(double x);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct Report {
    std::string experiment;
    std::string config_echo;     // canonical JSON
    std::string version = kTrapwalkVersion;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, bool>> hard_assertions;
    std::vector<std::string> notes;
    double wall_seconds = 0;     // excluded from the determinism contract

    bool all_hard_passed() const;
    const Table* table(const std::string& name) const;
};

// One CSV per table, named <experiment>_<table>.csv; returns the paths.
std::vector<std::filesystem::path> write_report_csv(const Report& report,
                                                    const std::filesystem::path& dir);
void write_report_json(const Report& report, const std::filesystem::path& file);

// X field (k_n-step survival at every site), quantile ladder, level sets,
// lambda field on the B_R-dilation of U_{alpha1} (sites farther away cannot
// reach the D_* threshold), and greedy island selection.
struct HierarchyBuild {
    ScalarField xfield;
    LambdaField lfield;
    IslandHierarchy hier;
    ClusterLabeling clusters;
};

HierarchyBuild build_hierarchy(const Environment& env, const ScaleParams& params,
                               const SpectralOptions& sopt = {});

// Empirical tail of X_v over margin-interior sites (l-inf distance > k_n from
// the box edge, so the horizon cannot see the boundary), pooled over the
// batch: for each beta the ratio F(beta)/F(c2 beta log n) and the implied
// c1_hat = ratio / k_n^d; betas whose denominator count is zero are flagged
// unusable. Also reports beta_chi and the observed frequency of
// {X_v >= beta_chi} next to n^{-d+1}.
Report run_tail_experiment(const ExperimentConfig& cfg);

// Per environment (skipped unless the origin lies in the spanning cluster
// with positive survival): exact endpoint mass of D_n under {tau > n} from
// endpoint_law, sampled fractions of paths with S_[T(v*),n] inside the
// localization ball of v* and with T(v*) <= c |S_{T(v*)}|, quantiles of
// T(v*)/|S_{T(v*)}|, and the concentration ratio of the endpoint mass
// against the uniform share |D_n|/|spanning cluster|.
Report run_localization_experiment(const ExperimentConfig& cfg);

// Exact -log P(tau > n) on the n grid per seed (one backward pass per
// environment), least-squares slope against n (log n)^{-2/d}. Hard-asserts
// strict monotonicity in n and slope positivity per usable seed; reports
// c_hat beside c* with no agreement assertion. Seeds whose origin has zero
// survival at max n are excluded and listed.
Report run_survival_asymptotics(const ExperimentConfig& cfg);

// Exact left sides against hierarchy right sides on a grid of tuples.
// Hard-asserted (finite-size theorems given the definitions, slack 1+1e-8):
//   lambda_v^m <= max_x P^x(xi_{C_R(v)} > m) <= (2R)^{d/2} lambda_v^m
//   P^v(tau_{U_alpha u O} > m) <= (2R)^{d/2} p_alpha^{m/k_n}   for m <= R
// Report-only (asymptotic events enter their proofs):
//   P^v(tau_{O u D_lambda} > m) <= R^{3d} lambda^m
//   P^u(S_t = w, tau > t) >= (2d)^{-rho(|u-v|+|v-w|+R)} lambda_v^t
// The loop bound is evaluated on parity-valid connected tuples with l2
// distances; besides the pass flag at the configured rho, each row carries
// the critical rho making the bound tight.
Report run_inequality_suite(const ExperimentConfig& cfg);

}  // namespace trapwalk
