#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace fbhm {

/// Runs task(i) for i in [0, count) on up to `threads` workers. Exceptions thrown by a task
/// are captured per index and returned, never propagated.
template <typename Task>
std::vector<std::exception_ptr> parallel_for(int count, int threads, Task&& task)
{
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](int i) {
        try {
            task(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const int pool = std::max(1, std::min(threads, count));
    if (pool == 1) {
        for (int i = 0; i < count; ++i)
            guarded(i);
        return errors;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < pool; ++t)
        workers.emplace_back([&] {
            for (int i = next++; i < count; i = next++)
                guarded(i);
        });
    for (auto& w : workers)
        w.join();
    return errors;
}

inline int default_threads()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace fbhm
