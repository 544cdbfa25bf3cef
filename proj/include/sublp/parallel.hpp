#pragma once

#include <cstddef>
#include <functional>

namespace sublp {

/// Worker count: SUBLP_THREADS if set (>= 1), else the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads.  Every index
/// is processed exactly once; results must not depend on which thread runs it.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sublp
