#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace ew {

/// Worker count: ENTROPYWALKS_THREADS if set and positive, else the hardware count.
int thread_count();

/// Runs body(i) for i in [0, count) across thread_count() workers. Work is
/// split into contiguous blocks; callers must make body(i) depend only on i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// splitmix64 finalizer of (master, stream): independent per-task seeds that do
/// not depend on scheduling order.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace ew
