// parallel.hpp: deterministic chunked parallel map over trajectory indices

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace fbqt {

/// Chunk size is fixed so partial results, and their merge order, never depend on thread count.
inline constexpr std::int64_t kChunkSize = 64;

/// Calls work(begin, end) for consecutive chunks of [0, n) on `threads` workers and
/// returns the partial results in chunk order. The first exception thrown is rethrown.
template <typename Partial, typename Work>
std::vector<Partial> run_chunked(std::int64_t n, int threads, Work&& work) {
    const std::int64_t chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<std::optional<Partial>> slots(static_cast<std::size_t>(chunks));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= chunks) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                const std::int64_t begin = c * kChunkSize;
                slots[static_cast<std::size_t>(c)].emplace(work(begin, std::min(n, begin + kChunkSize)));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(chunks, 1)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Partial> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace fbqt
