/**
 * @file parallel.hpp
 * @brief Minimal worker-thread helpers. Chunking is fixed so that reductions
 *        summed in chunk order are deterministic for any thread count.
 */
#ifndef BRAINSHIFT_PARALLEL_HPP
#define BRAINSHIFT_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace brainshift {

/// Worker count: BRAINSHIFT_THREADS if set, else hardware concurrency.
int thread_count();

/// Run tasks concurrently on up to thread_count() workers.
void parallel_tasks(const std::vector<std::function<void()>> &tasks);

/// Partition [0, n) into fixed-size chunks and run body(begin, end, chunk_id).
/// The chunking does not depend on the worker count.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)> &body);
std::size_t chunk_count(std::size_t n);

} // namespace brainshift

#endif
