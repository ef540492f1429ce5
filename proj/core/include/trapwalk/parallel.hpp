#pragma once

#include <cstdint>
#include <functional>

namespace trapwalk {

// Worker count: min(hardware_concurrency, TRAPWALK_THREADS if set). At least 1.
int worker_count();

// Static block partition of [0, count) across workers; f(begin, end) runs on
// each worker's range. Deterministic partition: results must not depend on
// scheduling, so callers write to disjoint slots. Runs inline when a single
// worker suffices.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& f);

}  // namespace trapwalk
