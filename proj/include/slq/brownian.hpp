#pragma once

#include "slq/grid.hpp"
#include "slq/parallel.hpp"

#include <cstdint>

namespace slq {

/// Brownian values B(t_k) on every node for a set of independent paths.
/// Path p uses its own generator seeded from (seed, global path index), so any
/// slice reproduces the same values as the full ensemble.
class BrownianEnsemble {
public:
    BrownianEnsemble() = default;
    BrownianEnsemble(const TimeGrid& grid, Eigen::Index n_paths, std::uint64_t seed,
                     Execution exec = Execution::Parallel);

    const TimeGrid& grid() const { return grid_; }
    Eigen::Index n_paths() const { return values_.rows(); }
    std::uint64_t seed() const { return seed_; }
    /// Index of the first path in the generating ensemble (non-zero for slices).
    Eigen::Index first_path() const { return first_; }

    double B(Eigen::Index path, int node) const { return values_(path, node); }
    double increment(Eigen::Index path, int step) const { return values_(path, step + 1) - values_(path, step); }
    /// Values of all paths at one node (contiguous).
    auto node(int k) const { return values_.col(k); }
    const Matrix& values() const { return values_; }

    /// Copy of paths [first, first + count).
    BrownianEnsemble slice(Eigen::Index first, Eigen::Index count) const;

private:
    TimeGrid grid_;
    std::uint64_t seed_ = 0;
    Eigen::Index first_ = 0;
    Matrix values_;  // n_paths × (N+1), column-major so each node is contiguous
};

/// SplitMix64 finalizer used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace slq
