#pragma once

#include <cstddef>
#include <vector>

#include "dyntok/merge_map.hpp"
#include "dyntok/token_matrix.hpp"

namespace dyntok {

// Bipartite partition of sequence positions: A holds merge sources, B holds
// destinations. With alternating assignment position 0 is always in B, so a
// leading class token cannot be merged away.
struct BipartiteSplit {
    std::vector<std::size_t> set_a;
    std::vector<std::size_t> set_b;
};

// Candidate merge of token src (in A) into token dst (in B).
struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double score = 0.0;
};

using EdgeSet = std::vector<Edge>;

// Odd positions to A, even positions to B. protect_first only documents the
// intent; parity already pins position 0 to the destination side.
BipartiteSplit split_alternating(std::size_t n, bool protect_first = true);

// For every source token, its best destination by cosine similarity of key
// rows. Ties go to the lowest destination index. Edges are returned in
// ascending source order, one per source.
EdgeSet bipartite_scores(const TokenMatrix& keys, const BipartiteSplit& split);

// Edges with score >= tau, order preserved.
EdgeSet select_edges_threshold(const EdgeSet& edges, double tau);

// The r highest-scoring edges (ties broken toward lower source index),
// returned in ascending source order. r >= |edges| selects everything.
EdgeSet select_edges_topr(const EdgeSet& edges, std::size_t r);

struct MergeStep {
    TokenMatrix tokens;
    MergeMap map;
};

// Fold each selected source row into its destination as a size-weighted
// average, accumulate sizes, drop sources. The returned map relates the
// input positions of this step to the surviving rows; output rows follow the
// map's group order.
MergeStep apply_merge(const TokenMatrix& x, const SizeVector& layer_sizes,
                      const EdgeSet& selected);

// Softmax((q k^T) * scale + log sizes) v, row-wise stabilized softmax.
// k, v and sizes must agree on the key count; q may have any row count.
TokenMatrix size_weighted_attention(const TokenMatrix& q, const TokenMatrix& k,
                                    const TokenMatrix& v, const SizeVector& sizes,
                                    double scale);

} // namespace dyntok
