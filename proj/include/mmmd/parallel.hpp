#pragma once

#include <cstddef>
#include <functional>

namespace mmmd {

/// Number of worker threads used by parallel_for. Defaults to the
/// MMMD_THREADS environment variable, else std::thread::hardware_concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);

/// Runs body(begin, end) over [0, count) split into chunks of `grain`.
/// Chunk boundaries depend only on count and grain, never on the number of
/// threads, so callers that write results by index are deterministic.
void parallel_for(std::size_t count, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mmmd
