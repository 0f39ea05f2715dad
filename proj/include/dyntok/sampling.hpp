#pragma once

#include <algorithm>
#include <random>

#include "dyntok/merge_map.hpp"
#include "dyntok/token_matrix.hpp"
#include "dyntok/vtu.hpp"

namespace dyntok {

// Random partition of n positions into exactly n_un non-empty groups.
inline MergeMap random_merge_map(std::mt19937_64& rng, std::size_t n,
                                 std::size_t n_un) {
    if (n_un == 0 || n_un > n)
        throw ShapeError("random_merge_map: need 1 <= n_un <= n");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> groups(n_un);
    for (std::size_t j = 0; j < n_un; ++j)
        groups[j].push_back(perm[j]);
    std::uniform_int_distribution<std::size_t> pick(0, n_un - 1);
    for (std::size_t i = n_un; i < n; ++i)
        groups[pick(rng)].push_back(perm[i]);
    return MergeMap(n, std::move(groups));
}

inline TokenMatrix random_tokens(std::mt19937_64& rng, std::size_t rows,
                                 std::size_t cols, double scale = 1.0) {
    TokenMatrix m(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : m.data)
        v = dist(rng) * scale;
    return m;
}

inline UniqueSequence random_unique_sequence(std::mt19937_64& rng, std::size_t n,
                                             std::size_t n_un, std::size_t d) {
    return {random_tokens(rng, n_un, d), random_merge_map(rng, n, n_un)};
}

} // namespace dyntok
