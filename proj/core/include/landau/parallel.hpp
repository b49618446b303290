#pragma once

#include <cstddef>
#include <functional>

namespace landau {

/// Worker count taken from LANDAU_THREADS (default 1). Read once.
int thread_count();

/// Overrides the worker count for this process (tests, benchmarks).
void set_thread_count(int n);

/// Runs fn(chunk, begin, end) over [0, n) split into a fixed number of
/// chunks that depends only on n, never on the worker count. Callers write
/// per-chunk partial results and reduce them in chunk order, which makes
/// every reduction bit-identical for any LANDAU_THREADS.
void for_chunks(std::size_t n, std::size_t n_chunks,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Number of chunks used for a loop of length n.
std::size_t default_chunks(std::size_t n);

/// Pairwise (cascade) sum of a contiguous range.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace landau
