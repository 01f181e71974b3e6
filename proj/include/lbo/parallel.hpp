#pragma once

#include <functional>

namespace lbo {

/// Worker count: LBO_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [begin, end) over contiguous chunks. Iterations must
/// be independent; the first exception thrown by any chunk is rethrown.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

} // namespace lbo
