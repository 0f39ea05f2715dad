#pragma once

#include <cstddef>
#include <vector>

#include "dyntok/merge_map.hpp"
#include "dyntok/nn.hpp"
#include "dyntok/rope.hpp"
#include "dyntok/token_matrix.hpp"
#include "dyntok/vtu.hpp"

// Brute-force reference implementations used as ground truth in equivalence
// tests and by the verify command. Everything here recomputes from first
// principles; none of the optimized kernels are called.
namespace dyntok::oracle {

// Rotate per-head Q and K rows by their position angles, take the full
// N x N similarity, masked softmax, weigh V, concatenate heads, project.
TokenMatrix full_rope_attention(const TokenMatrix& e, const RopeAngles& angles,
                                const AttentionWeights& w,
                                const AttentionMask* mask = nullptr);

// Definitional target for vtu_attention: expand unique rows to the full
// sequence, run full_rope_attention, group-average back.
TokenMatrix reference_vtu(const UniqueSequence& seq, const AttentionWeights& w,
                          const RopeAngles& angles,
                          const AttentionMask* mask = nullptr);

// One query against keys/values where entry j is physically replicated
// sizes[j] times; ground truth for size-weighted attention.
std::vector<double> duplicated_attention(const std::vector<double>& q_row,
                                         const TokenMatrix& k_un,
                                         const TokenMatrix& v_un,
                                         const SizeVector& sizes, double scale);

// k-th largest score by full descending sort, with the same infinity rules
// as the calibrator: k = 0 gives +inf, k >= |scores| gives -inf.
double reference_threshold(const std::vector<double>& scores, std::size_t k);

} // namespace dyntok::oracle
