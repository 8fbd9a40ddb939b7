#include "dalbt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dalbt {

int thread_count() {
    static const int cached = [] {
        if (const char* env = std::getenv("DALBT_THREADS")) {
            int n = std::atoi(env);
            if (n >= 1) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? static_cast<int>(hw) : 1;
    }();
    return cached;
}

namespace {

// First exception thrown by any worker, rethrown on the calling thread.
struct ErrorSlot {
    std::mutex mu;
    std::exception_ptr err;

    void capture() {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
    }
    void rethrow() {
        if (err) std::rethrow_exception(err);
    }
};

} // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t workers = static_cast<std::size_t>(thread_count());
    if (n == 0) return;
    if (workers <= 1 || n < 2 * workers) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    ErrorSlot error;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t end = std::min(begin + chunk, n);
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                error.capture();
            }
        });
    }
    for (auto& t : threads) t.join();
    error.rethrow();
}

std::vector<ChunkRange> make_chunks(std::size_t n, std::size_t grain) {
    if (grain == 0) grain = 1;
    std::vector<ChunkRange> chunks;
    chunks.reserve((n + grain - 1) / grain);
    for (std::size_t begin = 0; begin < n; begin += grain)
        chunks.push_back({begin, std::min(begin + grain, n)});
    return chunks;
}

void run_chunks(std::size_t num_chunks, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(thread_count()), num_chunks);
    if (workers <= 1) {
        for (std::size_t i = 0; i < num_chunks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    ErrorSlot error;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < num_chunks && !stop.load();
                 i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    error.capture();
                    stop.store(true);
                }
            }
        });
    for (auto& t : threads) t.join();
    error.rethrow();
}

} // namespace dalbt
