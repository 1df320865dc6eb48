#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace sqpc {

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_num_threads(int n) { thread_setting() = std::max(1, n); }
inline int num_threads() { return thread_setting().load(); }

// Splits [0, n) into contiguous chunks, one per worker; chunk boundaries depend only on n and the thread count.
inline void parallel_chunks(long n, const std::function<void(int chunk, long begin, long end)>& fn, int threads = 0) {
    if (threads <= 0) threads = num_threads();
    const long t = std::max<long>(1, std::min<long>(threads, n));
    if (t == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    const long step = (n + t - 1) / t;
    for (long k = 0; k < t; ++k) {
        const long b = k * step, e = std::min(n, b + step);
        if (b >= e) break;
        pool.emplace_back([&fn, k, b, e] { fn(static_cast<int>(k), b, e); });
    }
    for (auto& th : pool) th.join();
}

inline int chunk_count(long n, int threads = 0) {
    if (threads <= 0) threads = num_threads();
    const long t = std::max<long>(1, std::min<long>(threads, n));
    if (t == 1) return 1;
    const long step = (n + t - 1) / t;
    return static_cast<int>((n + step - 1) / step);
}

}  // namespace sqpc
