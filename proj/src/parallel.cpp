#include "enroll/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace enroll {

unsigned thread_count() {
    unsigned n = 0;
    if (const char* env = std::getenv("ENROLL_OPT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) n = static_cast<unsigned>(v);
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t, unsigned)>& fn,
                     unsigned* chunks_out) {
    if (n <= 0) {
        if (chunks_out) *chunks_out = 0;
        return;
    }
    unsigned workers = std::min<std::int64_t>(thread_count(), n);
    if (chunks_out) *chunks_out = workers;
    if (workers == 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t per = n / workers;
    std::int64_t extra = n % workers;
    std::int64_t begin = 0;
    for (unsigned w = 0; w < workers; ++w) {
        std::int64_t end = begin + per + (w < static_cast<unsigned>(extra) ? 1 : 0);
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
        begin = end;
    }
    for (auto& t : pool) t.join();
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn) {
    parallel_chunks(end - begin, [&](std::int64_t lo, std::int64_t hi, unsigned) {
        for (std::int64_t i = lo; i < hi; ++i) fn(begin + i);
    });
}

}  // namespace enroll
