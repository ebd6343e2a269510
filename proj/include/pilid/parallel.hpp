#pragma once

#include <cstddef>
#include <functional>

namespace pilid {

// Worker cap from PILID_THREADS (default 1).
std::size_t worker_count();
// Overrides the environment; 0 restores it.
void set_worker_count(std::size_t n);

// Runs fn(c) for c in [0, n_chunks). Chunks are statically striped over
// workers; each chunk must write only its own output so that callers can
// reduce the results in chunk order afterwards.
void for_each_chunk(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

}  // namespace pilid
