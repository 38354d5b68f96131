#pragma once

#include <cstddef>
#include <functional>

namespace neqresponse {

/// Worker count from NEQRESPONSE_THREADS, else the hardware concurrency.
unsigned default_thread_count();

/// Calls body(i) for i in [0, n) on up to `threads` workers (0 means
/// default_thread_count()). Indices are split into contiguous blocks; the
/// first exception thrown by any worker is rethrown after all have joined.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace neqresponse
