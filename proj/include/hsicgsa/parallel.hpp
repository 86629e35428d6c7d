#pragma once

#include <cstddef>
#include <functional>

namespace hsicgsa {

/// Worker count used when a caller passes threads == 0.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// executed exactly once; callers write results into slot i so that the
/// outcome does not depend on scheduling. The first exception thrown by any
/// task is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace hsicgsa
