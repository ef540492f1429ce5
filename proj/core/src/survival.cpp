#include "trapwalk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trapwalk {

namespace {
constexpr double kUnderflowFloor = 1e-290;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

namespace detail {

// Kernel host shared by the table builder and the rolling one-shot passes.
// Rows have width volume+1; the trailing slot is the boundary sentinel
// (0 linear, -inf log) so the neighbor loop never branches.
struct FieldState {
    BoxSpec box;
    SurvivalQuery query;
    BoxStencil stencil;
    std::vector<std::uint8_t> adm;
    std::int64_t width = 0;
    double inv2d = 0;
    double log_inv2d = 0;

    ValueDomain domain = ValueDomain::Linear;
    std::int64_t horizon = 0;
    bool checkpointed = false;
    std::int64_t stride = 0;              // 0 for full storage
    std::vector<double> rows;             // full table or checkpoint rows
    std::vector<std::int64_t> stored_t;   // checkpointed: level of rows slot k

    FieldState(const Environment& env, const SurvivalQuery& q)
        : box(env.box()), query(q), stencil(env.box()) {
        if (q.horizon < 0) throw DomainError("survival horizon must be non-negative");
        width = stencil.volume + 1;
        inv2d = 1.0 / double(2 * box.d);
        log_inv2d = std::log(inv2d);
        horizon = q.horizon;
        adm.assign(static_cast<std::size_t>(stencil.volume), 0);
        for (std::int64_t i = 0; i < stencil.volume; ++i) {
            if (!env.is_open_index(i)) continue;
            const Site s = box.site(i);
            if (query.avoid.contains(s)) continue;
            if (query.confine && !query.confine->contains(s)) continue;
            adm[static_cast<std::size_t>(i)] = 1;
        }
    }

    double dead_value() const { return domain == ValueDomain::Log ? kNegInf : 0.0; }

    void init_ones(double* dst) const {
        const double live = domain == ValueDomain::Log ? 0.0 : 1.0;
        const double dead = dead_value();
        for (std::int64_t i = 0; i < stencil.volume; ++i)
            dst[i] = adm[static_cast<std::size_t>(i)] ? live : dead;
        dst[stencil.volume] = dead;
    }

    void init_indicator(double* dst, const SiteSet& hot) const {
        const double live = domain == ValueDomain::Log ? 0.0 : 1.0;
        const double dead = dead_value();
        for (std::int64_t i = 0; i < stencil.volume; ++i)
            dst[i] = adm[static_cast<std::size_t>(i)] && hot.contains(box.site(i)) ? live : dead;
        dst[stencil.volume] = dead;
    }

    // One backward step with the pinned summation order (stencil row order:
    // axis ascending, minus neighbor before plus). Rounding is monotone in
    // each addend, so level t+1 <= level t holds exactly in floating point.
    void step(const double* src, double* dst) const {
        const int deg = 2 * stencil.d;
        for (std::int64_t i = 0; i < stencil.volume; ++i) {
            if (!adm[static_cast<std::size_t>(i)]) {
                dst[i] = 0.0;
                continue;
            }
            const std::int32_t* row = stencil.row(i);
            double s = 0.0;
            for (int k = 0; k < deg; ++k) s += src[row[k]];
            dst[i] = s * inv2d;
        }
        dst[stencil.volume] = 0.0;
    }

    void step_log(const double* src, double* dst) const {
        const int deg = 2 * stencil.d;
        for (std::int64_t i = 0; i < stencil.volume; ++i) {
            if (!adm[static_cast<std::size_t>(i)]) {
                dst[i] = kNegInf;
                continue;
            }
            const std::int32_t* row = stencil.row(i);
            double m = kNegInf;
            for (int k = 0; k < deg; ++k) m = std::max(m, src[row[k]]);
            if (m == kNegInf) {
                dst[i] = kNegInf;
                continue;
            }
            double s = 0.0;
            for (int k = 0; k < deg; ++k) {
                const double v = src[row[k]];
                if (v != kNegInf) s += std::exp(v - m);
            }
            dst[i] = m + std::log(s) + log_inv2d;
        }
        dst[stencil.volume] = kNegInf;
    }

    void advance(const double* src, double* dst) const {
        domain == ValueDomain::Log ? step_log(src, dst) : step(src, dst);
    }

    double row_max(const double* row) const {
        double m = dead_value();
        for (std::int64_t i = 0; i < stencil.volume; ++i) m = std::max(m, row[i]);
        return m;
    }

    const double* full_row(std::int64_t t) const {
        return rows.data() + static_cast<std::size_t>(t) * width;
    }

    const double* checkpoint_row(std::int64_t t) const {
        auto it = std::lower_bound(stored_t.begin(), stored_t.end(), t);
        if (it == stored_t.end() || *it != t)
            throw ConsistencyError("missing checkpoint row");
        return rows.data() + static_cast<std::size_t>(it - stored_t.begin()) * width;
    }
};

}  // namespace detail

namespace {

using detail::FieldState;

// Builds the table in the state's current domain. Returns false when the
// linear sweep underflowed and the caller should restart in log domain.
bool build_table(FieldState& fs, bool full) {
    const std::int64_t w = fs.width;
    if (full) {
        fs.checkpointed = false;
        fs.stride = 0;
        fs.rows.assign(static_cast<std::size_t>((fs.horizon + 1)) * w, 0.0);
        double* r0 = fs.rows.data();
        fs.init_ones(r0);
        for (std::int64_t t = 1; t <= fs.horizon; ++t) {
            const double* src = fs.rows.data() + static_cast<std::size_t>(t - 1) * w;
            double* dst = fs.rows.data() + static_cast<std::size_t>(t) * w;
            fs.advance(src, dst);
            if (fs.domain == ValueDomain::Linear) {
                const double m = fs.row_max(dst);
                if (m > 0 && m < kUnderflowFloor) return false;
            }
        }
        return true;
    }

    fs.checkpointed = true;
    fs.stride = std::max<std::int64_t>(
        1, std::int64_t(std::ceil(std::sqrt(double(fs.horizon + 1)))));
    fs.stored_t.clear();
    for (std::int64_t t = 0; t <= fs.horizon; t += fs.stride) fs.stored_t.push_back(t);
    fs.rows.assign(fs.stored_t.size() * static_cast<std::size_t>(w), 0.0);

    std::vector<double> a(static_cast<std::size_t>(w)), b(static_cast<std::size_t>(w));
    fs.init_ones(a.data());
    std::copy_n(a.data(), w, fs.rows.data());
    std::size_t next_slot = 1;
    for (std::int64_t t = 1; t <= fs.horizon; ++t) {
        fs.advance(a.data(), b.data());
        std::swap(a, b);
        if (fs.domain == ValueDomain::Linear) {
            const double m = fs.row_max(a.data());
            if (m > 0 && m < kUnderflowFloor) return false;
        }
        if (next_slot < fs.stored_t.size() && fs.stored_t[next_slot] == t) {
            std::copy_n(a.data(), w, fs.rows.data() + next_slot * static_cast<std::size_t>(w));
            ++next_slot;
        }
    }
    return true;
}

}  // namespace

SurvivalField survival_field(const Environment& env, const SurvivalQuery& query,
                             const FieldOptions& options) {
    auto fs = std::make_shared<FieldState>(env, query);
    const std::uint64_t full_bytes =
        std::uint64_t(fs->horizon + 1) * std::uint64_t(fs->width) * sizeof(double);
    bool full = true;
    switch (options.storage) {
        case FieldStorage::Full:
            if (full_bytes > options.memory_cap_bytes)
                throw CapacityError("full survival table exceeds the memory cap");
            break;
        case FieldStorage::Checkpointed:
            full = false;
            break;
        case FieldStorage::Auto:
            full = full_bytes <= options.memory_cap_bytes;
            break;
    }
    fs->domain = options.force_log_domain ? ValueDomain::Log : ValueDomain::Linear;
    if (!build_table(*fs, full)) {
        fs->domain = ValueDomain::Log;
        build_table(*fs, full);
    }
    SurvivalField out;
    out.state_ = std::move(fs);
    return out;
}

const BoxSpec& SurvivalField::box() const { return state_->box; }
std::int64_t SurvivalField::horizon() const { return state_->horizon; }
ValueDomain SurvivalField::domain() const { return state_->domain; }
const SurvivalQuery& SurvivalField::query() const { return state_->query; }
bool SurvivalField::checkpointed() const { return state_->checkpointed; }
std::int64_t SurvivalField::checkpoint_stride() const { return state_->stride; }
const std::vector<std::uint8_t>& SurvivalField::admissible() const { return state_->adm; }

std::span<const double> SurvivalField::level(std::int64_t t) const {
    if (t < 0 || t > state_->horizon) throw DomainError("level outside horizon");
    if (state_->checkpointed)
        throw DomainError("level() needs full storage; use a Cursor on checkpointed fields");
    return {state_->full_row(t), static_cast<std::size_t>(state_->width)};
}

double SurvivalField::value(std::int64_t t, Site s) const {
    if (t < 0 || t > state_->horizon) throw DomainError("level outside horizon");
    if (!state_->box.contains(s)) throw DomainError("site outside field box");
    const std::int64_t i = state_->box.index(s);
    double raw;
    if (!state_->checkpointed) {
        raw = state_->full_row(t)[i];
    } else {
        Cursor c(this);
        raw = c.level(t)[static_cast<std::size_t>(i)];
    }
    // linear rows are returned untouched so exactness survives the accessor
    return state_->domain == ValueDomain::Log ? std::exp(raw) : raw;
}

double SurvivalField::log_value(std::int64_t t, Site s) const {
    if (t < 0 || t > state_->horizon) throw DomainError("level outside horizon");
    if (!state_->box.contains(s)) throw DomainError("site outside field box");
    const std::int64_t i = state_->box.index(s);
    double raw;
    if (!state_->checkpointed) {
        raw = state_->full_row(t)[i];
    } else {
        Cursor c(this);
        raw = c.level(t)[static_cast<std::size_t>(i)];
    }
    if (state_->domain == ValueDomain::Log) return raw;
    return raw > 0 ? std::log(raw) : kNegInf;
}

void SurvivalField::Cursor::load_block(std::int64_t base) {
    const FieldState& fs = *field_->state_;
    const std::int64_t w = fs.width;
    const std::int64_t top = std::min(base + fs.stride, fs.horizon);
    buf_.resize(static_cast<std::size_t>(fs.stride + 1) * w);
    std::copy_n(fs.checkpoint_row(base), w, buf_.data());
    for (std::int64_t t = base + 1; t <= top; ++t) {
        const double* src = buf_.data() + static_cast<std::size_t>(t - 1 - base) * w;
        double* dst = buf_.data() + static_cast<std::size_t>(t - base) * w;
        fs.advance(src, dst);
    }
    base_ = base;
    top_ = top;
}

std::span<const double> SurvivalField::Cursor::level(std::int64_t t) {
    const FieldState& fs = *field_->state_;
    if (t < 0 || t > fs.horizon) throw DomainError("level outside horizon");
    if (!fs.checkpointed)
        return {fs.full_row(t), static_cast<std::size_t>(fs.width)};
    const std::int64_t base = (t / fs.stride) * fs.stride;
    if (base_ != base) load_block(base);
    return {buf_.data() + static_cast<std::size_t>(t - base_) * fs.width,
            static_cast<std::size_t>(fs.width)};
}

std::pair<std::span<const double>, std::span<const double>> SurvivalField::Cursor::pair(
    std::int64_t t) {
    const FieldState& fs = *field_->state_;
    if (t < 1 || t > fs.horizon) throw DomainError("pair needs 1 <= t <= horizon");
    if (!fs.checkpointed)
        return {{fs.full_row(t), static_cast<std::size_t>(fs.width)},
                {fs.full_row(t - 1), static_cast<std::size_t>(fs.width)}};
    // Block anchored so that t-1 and t both land inside it.
    const std::int64_t base = ((t - 1) / fs.stride) * fs.stride;
    if (base_ != base || t > top_) load_block(base);
    return {{buf_.data() + static_cast<std::size_t>(t - base_) * fs.width,
             static_cast<std::size_t>(fs.width)},
            {buf_.data() + static_cast<std::size_t>(t - 1 - base_) * fs.width,
             static_cast<std::size_t>(fs.width)}};
}

namespace {

// Rolling two-row sweep with automatic log restart. init places row 0 for
// the state's current domain.
template <typename Init>
std::vector<double> roll_final(FieldState& fs, Init init) {
    const std::int64_t w = fs.width;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> a(static_cast<std::size_t>(w)), b(static_cast<std::size_t>(w));
        init(a.data());
        bool restart = false;
        for (std::int64_t t = 1; t <= fs.horizon && !restart; ++t) {
            fs.advance(a.data(), b.data());
            std::swap(a, b);
            if (fs.domain == ValueDomain::Linear) {
                const double m = fs.row_max(a.data());
                if (m > 0 && m < kUnderflowFloor) restart = true;
            }
        }
        if (!restart) return a;
        fs.domain = ValueDomain::Log;
    }
    throw ConsistencyError("log-domain sweep cannot underflow");
}

ScalarField to_scalar_field(const FieldState& fs, const std::vector<double>& row) {
    ScalarField out;
    out.box = fs.box;
    out.log_domain = fs.domain == ValueDomain::Log;
    out.values.assign(row.begin(), row.begin() + fs.stencil.volume);
    return out;
}

}  // namespace

ScalarField survival_final(const Environment& env, const SurvivalQuery& query) {
    FieldState fs(env, query);
    const auto row = roll_final(fs, [&fs](double* dst) { fs.init_ones(dst); });
    return to_scalar_field(fs, row);
}

ScalarField survival_final_from(const Environment& env, const SurvivalQuery& query,
                                const SiteSet& terminal) {
    FieldState fs(env, query);
    const auto row =
        roll_final(fs, [&fs, &terminal](double* dst) { fs.init_indicator(dst, terminal); });
    return to_scalar_field(fs, row);
}

double survival_probability(const Environment& env, Site start, const SurvivalQuery& query) {
    if (!env.box().contains(start)) throw DomainError("start outside box");
    const ScalarField f = survival_final(env, query);
    return f.prob_at(start);
}

std::vector<double> survival_log_trace(const Environment& env, Site start,
                                       const SurvivalQuery& query) {
    if (!env.box().contains(start)) throw DomainError("start outside box");
    FieldState fs(env, query);
    const std::int64_t w = fs.width;
    const std::int64_t idx = fs.box.index(start);

    std::vector<double> trace(static_cast<std::size_t>(fs.horizon + 1), kNegInf);
    if (!fs.adm[static_cast<std::size_t>(idx)]) return trace;

    for (int attempt = 0; attempt < 2; ++attempt) {
        const bool log_dom = fs.domain == ValueDomain::Log;
        std::vector<double> a(static_cast<std::size_t>(w)), b(static_cast<std::size_t>(w));
        fs.init_ones(a.data());
        trace[0] = 0.0;
        bool restart = false;
        for (std::int64_t t = 1; t <= fs.horizon && !restart; ++t) {
            fs.advance(a.data(), b.data());
            std::swap(a, b);
            const double v = a[static_cast<std::size_t>(idx)];
            if (log_dom) {
                trace[static_cast<std::size_t>(t)] = v;
            } else if (v >= kUnderflowFloor) {
                trace[static_cast<std::size_t>(t)] = std::log(v);
            } else {
                // Too small to trust in linear arithmetic (or exactly zero,
                // which only a log sweep can certify).
                restart = true;
            }
        }
        if (!restart) return trace;
        fs.domain = ValueDomain::Log;
    }
    throw ConsistencyError("log-domain trace cannot underflow");
}

ScalarField forward_kernel(const Environment& env, Site start, const SurvivalQuery& query) {
    if (!env.box().contains(start)) throw DomainError("start outside box");
    FieldState fs(env, query);
    SiteSet hot(env.box().d);
    hot.insert(start);
    const auto row = roll_final(fs, [&fs, &hot](double* dst) { fs.init_indicator(dst, hot); });
    return to_scalar_field(fs, row);
}

ScalarField endpoint_law(const Environment& env, Site start, std::int64_t n) {
    SurvivalQuery query;
    query.horizon = n;
    ScalarField f = forward_kernel(env, start, query);
    if (!f.log_domain) {
        double z = 0.0;
        for (double v : f.values) z += v;
        if (z <= 0) throw NoSurvivingPath("no path survives the requested horizon");
        for (double& v : f.values) v /= z;
        return f;
    }
    double m = kNegInf;
    for (double v : f.values) m = std::max(m, v);
    if (m == kNegInf) throw NoSurvivingPath("no path survives the requested horizon");
    double z = 0.0;
    for (double v : f.values)
        if (v != kNegInf) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    for (double& v : f.values) v = v == kNegInf ? 0.0 : std::exp(v - log_z);
    f.log_domain = false;
    return f;
}

}  // namespace trapwalk
