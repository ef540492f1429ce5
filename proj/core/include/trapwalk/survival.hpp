#pragma once

#include <memory>
#include <optional>
#include <span>

#include "trapwalk/lattice.hpp"

namespace trapwalk {

enum class ValueDomain { Linear, Log };
enum class FieldStorage { Auto, Full, Checkpointed };

// Killing rules for the walk. Obstacles always kill; `avoid` adds extra
// killing sites (tau_{O ∪ avoid}); `confine` kills on exit (xi_C), i.e. the
// walk must stay inside the set. Admissible sites are open, outside `avoid`
// and inside `confine`.
struct SurvivalQuery {
    std::int64_t horizon = 0;
    SiteSet avoid;
    std::optional<SiteSet> confine;
};

struct FieldOptions {
    FieldStorage storage = FieldStorage::Auto;
    std::uint64_t memory_cap_bytes = std::uint64_t(1) << 30;
    bool force_log_domain = false;
};

namespace detail {
struct FieldState;
}

// Exact survival table h_t(x) = P^x(walk stays admissible for t steps),
// t = 0..horizon. The recursion h_{t+1}(x) = (1/2d) sum_{y~x} h_t(y) is run
// with a fixed neighbor summation order, so results are bit-reproducible and
// h_{t+1} <= h_t holds exactly in floating point.
//
// Storage is either the full table or sqrt-spaced checkpoints; checkpointed
// levels are recomputed on demand through a Cursor and are bit-identical to
// the full table. When the linear field would underflow (max level value
// below 1e-290) the whole field is recomputed in log domain and flagged.
class SurvivalField {
public:
    const BoxSpec& box() const;
    std::int64_t horizon() const;
    ValueDomain domain() const;
    const SurvivalQuery& query() const;
    bool checkpointed() const;
    std::int64_t checkpoint_stride() const;
    const std::vector<std::uint8_t>& admissible() const;

    // Direct level access; spans have length volume+1 (trailing zero slot).
    // Requires full storage.
    std::span<const double> level(std::int64_t t) const;

    // Probability / log-probability regardless of storage or domain. These
    // may recompute a block per call on checkpointed fields; use a Cursor
    // for scans.
    double value(std::int64_t t, Site s) const;
    double log_value(std::int64_t t, Site s) const;

    // Per-consumer window over levels; owns its recompute buffer so
    // concurrent cursors on one field are safe.
    class Cursor {
    public:
        std::span<const double> level(std::int64_t t);
        // Adjacent pair (h_t, h_{t-1}) guaranteed to live simultaneously.
        std::pair<std::span<const double>, std::span<const double>> pair(std::int64_t t);

    private:
        friend class SurvivalField;
        explicit Cursor(const SurvivalField* f) : field_(f) {}
        void load_block(std::int64_t base);

        const SurvivalField* field_;
        std::int64_t base_ = -1, top_ = -1;
        std::vector<double> buf_;
    };

    Cursor cursor() const { return Cursor(this); }

    friend SurvivalField survival_field(const Environment&, const SurvivalQuery&,
                                        const FieldOptions&);

private:
    std::shared_ptr<const detail::FieldState> state_;
};

SurvivalField survival_field(const Environment& env, const SurvivalQuery& query,
                             const FieldOptions& options = {});

// Final level h_horizon only, in O(volume) memory. Switches to log domain on
// underflow (the returned field's log_domain flag is set).
ScalarField survival_final(const Environment& env, const SurvivalQuery& query);

// Same recursion started from the indicator of `terminal` instead of all
// ones: h_horizon(x) = P^x(stay admissible for horizon steps and land in
// terminal).
ScalarField survival_final_from(const Environment& env, const SurvivalQuery& query,
                                const SiteSet& terminal);

// P^start(walk stays admissible for query.horizon steps). Throws DomainError
// when start is outside the box. Returns 0 when start is inadmissible.
double survival_probability(const Environment& env, Site start, const SurvivalQuery& query);

// log h_t(start) for t = 0..horizon in one pass (-inf where h = 0).
std::vector<double> survival_log_trace(const Environment& env, Site start,
                                       const SurvivalQuery& query);

// Killed two-point kernel at the query horizon: field value at w equals
// P^start(S_t = w, walk stays admissible through t), t = query.horizon.
ScalarField forward_kernel(const Environment& env, Site start, const SurvivalQuery& query);

// Law of S_n conditioned on surviving n steps among obstacles, computed
// exactly by the forward recursion. Throws NoSurvivingPath when the
// conditioning event has probability zero.
ScalarField endpoint_law(const Environment& env, Site start, std::int64_t n);

}  // namespace trapwalk
