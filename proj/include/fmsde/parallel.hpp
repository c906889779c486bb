#pragma once
/**
 * @file parallel.hpp
 * @brief Deterministic block-parallel path loops.
 *
 * Paths are partitioned into fixed-size blocks regardless of worker count;
 * each block owns a slot for its partial result, blocks are claimed through
 * an atomic counter, and the final reduction runs sequentially over slots in
 * block order with compensated summation. Results are therefore bit-identical
 * for any number of workers at a fixed seed.
 */

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fmsde {

inline std::size_t default_workers() {
    if (const char* env = std::getenv("FMSDE_WORKERS")) {
        long v = std::atol(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

constexpr std::size_t kPathBlock = 256;

/**
 * Runs fn(block_index, path_begin, path_end) over all blocks of [0, n_paths)
 * on `workers` threads. fn must write only to its own block's state. An
 * exception thrown by any block is rethrown after joining; the lowest block
 * index wins so failures are reported deterministically.
 */
template <typename Fn>
void for_each_block(std::size_t n_paths, std::size_t workers, Fn&& fn) {
    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    if (workers <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * kPathBlock, std::min(n_paths, (b + 1) * kPathBlock));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_blocks);
    auto worker = [&]() {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                fn(b, b * kPathBlock, std::min(n_paths, (b + 1) * kPathBlock));
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace fmsde
