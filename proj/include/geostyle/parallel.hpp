#pragma once

#include <cstddef>
#include <functional>

namespace geostyle {

/// Worker cap for parallel_for. 0 means "use hardware concurrency".
/// Initialised from the FAG_THREADS environment variable when set.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker and results must be written to per-index slots; callers reduce
/// afterwards in index order, so output never depends on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace geostyle
