#include <benchmark/benchmark.h>

#include "trapwalk/trapwalk.hpp"

using namespace trapwalk;

namespace {

BoxSpec box2(std::int32_t hw) {
    BoxSpec b;
    b.d = 2;
    b.half_width = hw;
    return b;
}

void bm_environment_generate(benchmark::State& state) {
    const BoxSpec b = box2(std::int32_t(state.range(0)));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const Environment env = Environment::generate(b, 0.7, seed++);
        benchmark::DoNotOptimize(env.open_count());
    }
    state.SetItemsProcessed(state.iterations() * b.volume());
}
BENCHMARK(bm_environment_generate)->Arg(50)->Arg(200);

void bm_label_clusters(benchmark::State& state) {
    const Environment env = Environment::generate(box2(std::int32_t(state.range(0))), 0.6, 7);
    for (auto _ : state) {
        const ClusterLabeling labels = label_clusters(env);
        benchmark::DoNotOptimize(labels.cluster_count());
    }
    state.SetItemsProcessed(state.iterations() * env.box().volume());
}
BENCHMARK(bm_label_clusters)->Arg(50)->Arg(200);

void bm_survival_step(benchmark::State& state) {
    const Environment env = Environment::generate(box2(std::int32_t(state.range(0))), 0.7, 11);
    SurvivalQuery q;
    q.horizon = 64;
    for (auto _ : state) {
        const SurvivalField field = survival_field(env, q);
        benchmark::DoNotOptimize(field.value(q.horizon, Site{}));
    }
    // one backward level touches every site once
    state.SetItemsProcessed(state.iterations() * q.horizon * env.box().volume());
}
BENCHMARK(bm_survival_step)->Arg(25)->Arg(100);

void bm_survival_checkpointed_scan(benchmark::State& state) {
    const Environment env = Environment::generate(box2(40), 0.7, 11);
    SurvivalQuery q;
    q.horizon = 256;
    FieldOptions opt;
    opt.storage = FieldStorage::Checkpointed;
    const SurvivalField field = survival_field(env, q, opt);
    for (auto _ : state) {
        auto cur = field.cursor();
        double acc = 0;
        for (std::int64_t t = q.horizon; t >= 0; --t) acc += cur.level(t)[0];
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * q.horizon * env.box().volume());
}
BENCHMARK(bm_survival_checkpointed_scan);

void bm_principal_eigen(benchmark::State& state) {
    const Environment env = Environment::generate(box2(20), 0.7, 3);
    const RestrictedComponent comp = restricted_component(env, Site{}, double(state.range(0)));
    if (comp.sites.empty()) {
        state.SkipWithError("origin closed in the benchmark environment");
        return;
    }
    for (auto _ : state) {
        const SpectralResult res = principal_eigen(env, comp);
        benchmark::DoNotOptimize(res.lambda);
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(comp.sites.size()));
}
BENCHMARK(bm_principal_eigen)->Arg(4)->Arg(8)->Arg(16);

void bm_loop_erase(benchmark::State& state) {
    RngStream rng(99);
    Path w{Site{}};
    for (std::int64_t t = 0; t < state.range(0); ++t) {
        Site s = w.back();
        s.c[rng.below(2)] += rng.below(2) == 0 ? -1 : 1;
        w.push_back(s);
    }
    for (auto _ : state) {
        const LoopDecomposition dec = loop_erase(w);
        benchmark::DoNotOptimize(dec.eta.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_loop_erase)->Arg(1000)->Arg(100000);

void bm_sample_conditioned(benchmark::State& state) {
    const Environment env = Environment::all_open(box2(30));
    SurvivalQuery q;
    q.horizon = 128;
    const SurvivalField field = survival_field(env, q);
    std::uint64_t master = 0;
    for (auto _ : state) {
        const auto paths = sample_conditioned_batch(env, Site{}, field, master++, 16);
        benchmark::DoNotOptimize(paths.size());
    }
    state.SetItemsProcessed(state.iterations() * 16 * q.horizon);
}
BENCHMARK(bm_sample_conditioned);

void bm_endpoint_law(benchmark::State& state) {
    const Environment env = Environment::generate(box2(40), 0.8, 5);
    for (auto _ : state) {
        try {
            const ScalarField law = endpoint_law(env, Site{}, 200);
            benchmark::DoNotOptimize(law.values.data());
        } catch (const NoSurvivingPath&) {
            state.SkipWithError("no surviving path from the origin");
            return;
        }
    }
    state.SetItemsProcessed(state.iterations() * 200 * env.box().volume());
}
BENCHMARK(bm_endpoint_law);

}  // namespace

BENCHMARK_MAIN();
