#include "geostyle/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace geostyle {

namespace {

std::size_t initial_thread_count()
{
    if (const char* env = std::getenv("FAG_THREADS")) {
        try {
            return static_cast<std::size_t>(std::stoul(env));
        } catch (...) {
            return 0;
        }
    }
    return 0;
}

std::atomic<std::size_t>& configured()
{
    static std::atomic<std::size_t> threads{initial_thread_count()};
    return threads;
}

} // namespace

void set_thread_count(std::size_t threads)
{
    configured().store(threads);
}

std::size_t thread_count()
{
    const std::size_t t = configured().load();
    if (t != 0) return t;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers = std::min(thread_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    // Indices are handed out in increasing order, so every index below a
    // failing one has been dispatched and runs to completion; keeping the
    // lowest failing index reproduces the sequential error.
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::size_t first_error_index = count;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace geostyle
