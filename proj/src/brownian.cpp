#include "slq/brownian.hpp"

#include "slq/errors.hpp"

#include <cmath>
#include <random>

namespace slq {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

BrownianEnsemble::BrownianEnsemble(const TimeGrid& grid, Eigen::Index n_paths, std::uint64_t seed, Execution exec)
    : grid_(grid), seed_(seed)
{
    if (n_paths < 1) throw Error(ErrorCode::InvalidConfig, "bsde", "ensemble needs at least one path");
    values_.resize(n_paths, grid.nodes());
    const double sqrt_dt = std::sqrt(grid.dt());
    const double sqrt_s = std::sqrt(grid.s);
    for_each_chunk(n_paths, exec, [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index p = begin; p < end; ++p) {
            std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(p)));
            std::normal_distribution<double> normal;
            double b = grid.s > 0.0 ? sqrt_s * normal(rng) : 0.0;
            values_(p, 0) = b;
            for (int k = 0; k < grid.N; ++k) {
                b += sqrt_dt * normal(rng);
                values_(p, k + 1) = b;
            }
        }
    });
}

BrownianEnsemble BrownianEnsemble::slice(Eigen::Index first, Eigen::Index count) const
{
    if (first < 0 || count < 1 || first + count > n_paths()) {
        throw Error(ErrorCode::InvalidConfig, "bsde", "ensemble slice out of range");
    }
    BrownianEnsemble out;
    out.grid_ = grid_;
    out.seed_ = seed_;
    out.first_ = first_ + first;
    out.values_ = values_.middleRows(first, count);
    return out;
}

}  // namespace slq
