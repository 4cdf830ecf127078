#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geoverify {

/// Runs fn(k) for k in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically, so fn must write only to slot k of its outputs; any
/// combination of results happens afterwards in index order. The first
/// exception thrown by a worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Per-row partial sums computed independently and then added in row order,
/// so the total is bit-identical for any thread count.
template <class RowFn>
double ordered_row_sum(std::size_t rows, unsigned threads, RowFn&& row_fn) {
    std::vector<double> partial(rows, 0.0);
    parallel_for(rows, threads, [&](std::size_t i) { partial[i] = row_fn(i); });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace geoverify
