#pragma once

#include <cstddef>
#include <functional>

namespace mottrw {

// Thread count from the request, else MOTTRW_THREADS, else hardware.
unsigned resolve_threads(unsigned requested = 0);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must
// write only to their own slots; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace mottrw
