#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <exception>
#include <vector>

namespace slq {

/// Kernel execution policy. Serial runs one straight loop over all paths and is the
/// reference the parallel kernels are tested against.
enum class Execution { Serial, Parallel };

/// Paths per chunk in parallel kernels. Fixed so the reduction order does not depend
/// on the number of threads.
inline constexpr Eigen::Index kPathChunk = 2048;

inline Eigen::Index chunk_count(Eigen::Index n)
{
    return (n + kPathChunk - 1) / kPathChunk;
}

/// Calls body(begin, end) over [0, n). Serial: one call on the full range.
/// Parallel: one call per fixed chunk, chunks distributed over OpenMP threads.
template <class Body>
void for_each_chunk(Eigen::Index n, Execution exec, Body&& body)
{
    if (n <= 0) return;
    if (exec == Execution::Serial) {
        body(Eigen::Index{0}, n);
        return;
    }
    const Eigen::Index chunks = chunk_count(n);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
        try {
            const Eigen::Index begin = c * kPathChunk;
            body(begin, std::min(n, begin + kPathChunk));
        } catch (...) {
#pragma omp critical(slq_chunk_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

/// Sum of body(begin, end, acc) contributions over [0, n). The parallel variant keeps
/// one partial per chunk and adds them in chunk order, so the result is the same for
/// any thread count. Acc must support +=.
template <class Acc, class Body>
Acc reduce_chunks(Eigen::Index n, Execution exec, const Acc& zero, Body&& body)
{
    if (exec == Execution::Serial || n <= 0) {
        Acc acc = zero;
        if (n > 0) body(Eigen::Index{0}, n, acc);
        return acc;
    }
    const Eigen::Index chunks = chunk_count(n);
    std::vector<Acc> partial(static_cast<std::size_t>(chunks), zero);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
        try {
            const Eigen::Index begin = c * kPathChunk;
            body(begin, std::min(n, begin + kPathChunk), partial[static_cast<std::size_t>(c)]);
        } catch (...) {
#pragma omp critical(slq_chunk_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    Acc total = zero;
    for (const Acc& p : partial) total += p;
    return total;
}

}  // namespace slq
