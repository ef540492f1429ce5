#include "trapwalk/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace trapwalk {

int worker_count() {
    int n = int(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("TRAPWALK_THREADS")) {
        try {
            const int limit = std::stoi(cap);
            if (limit >= 1) n = std::min(n, limit);
        } catch (...) {
            // Unparsable cap is ignored; the platform count stands.
        }
    }
    return n;
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& f) {
    if (count <= 0) return;
    const int workers = int(std::min<std::int64_t>(worker_count(), count));
    if (workers <= 1) {
        f(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t b = std::int64_t(w) * chunk;
        const std::int64_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&f, b, e] { f(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace trapwalk
