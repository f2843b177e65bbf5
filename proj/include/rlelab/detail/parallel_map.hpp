#pragma once

#include <atomic>
#include <optional>
#include <thread>

namespace rlelab {

template <class T>
std::vector<T> parallel_map(std::size_t n, std::size_t workers,
                            const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= n) return;
            try {
                slots[k].emplace(fn(k));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };

    const std::size_t w = resolve_workers(workers, n);
    if (w <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(w);
        for (std::size_t i = 0; i < w; ++i) pool.emplace_back(work);
    }

    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace rlelab
