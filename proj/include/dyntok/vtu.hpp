#pragma once

#include <cstdint>
#include <string>

#include "dyntok/merge_map.hpp"
#include "dyntok/nn.hpp"
#include "dyntok/rope.hpp"
#include "dyntok/token_matrix.hpp"

namespace dyntok {

// Deduplicated sequence: unique rows plus the partition tying them to the
// full positions 0..map.n_full()-1.
struct UniqueSequence {
    TokenMatrix e_un;
    MergeMap map;
};

// One rotation component of the query/key dot product at position offset
// dtheta: (q1 k1 + q2 k2) cos + (q1 k2 - q2 k1) sin.
double rope_similarity_entry(double q1, double q2, double k1, double k2,
                             double dtheta);

// Component-summed gram matrices of the unique rows:
// qk[i][j]  = sum_k q1 k1 + q2 k2   (rotation-invariant part)
// qxk[i][j] = sum_k q1 k2 - q2 k1   (cross part)
struct GramPair {
    TokenMatrix qk;
    TokenMatrix qxk;
};
GramPair gram_pair(const TokenMatrix& q_un, const TokenMatrix& k_un);

// Multiplication counters from an instrumented similarity run.
struct SimilarityStats {
    std::uint64_t gram_mults = 0;     // building per-component grams
    std::uint64_t assembly_mults = 0; // trig-weighted assembly of the N x N result
    std::uint64_t attn_mults = 0;     // post-similarity stage of vtu_attention
};

// Full N x N rotary similarity of the expanded sequence, reconstructed from
// per-head unique rows (N_un x head_dim) without expanding q or k.
TokenMatrix vtu_similarity(const TokenMatrix& q_un, const TokenMatrix& k_un,
                           const MergeMap& map, const RopeAngles& angles,
                           SimilarityStats* stats = nullptr);

// Multi-head rotary self-attention over unique rows, exactly matching the
// group-averaged full-sequence result. Mask (if given) is over full positions.
UniqueSequence vtu_attention(const UniqueSequence& seq, const AttentionWeights& w,
                             const RopeAngles& angles,
                             const AttentionMask* mask = nullptr,
                             SimilarityStats* stats = nullptr);

// Row-wise operators act on unique rows directly; the map is untouched.
template <typename Op>
UniqueSequence lift_pointwise(Op&& op, const UniqueSequence& seq) {
    UniqueSequence out{op(seq.e_un), seq.map};
    if (out.e_un.rows != seq.e_un.rows)
        throw ShapeError("lift_pointwise: op changed the row count");
    return out;
}

// Pre-norm block: x + attn(LN(x)), then + MLP(LN(x)), all on unique rows.
UniqueSequence decoder_layer_vtu(const UniqueSequence& seq,
                                 const DecoderLayerWeights& w,
                                 const RopeAngles& angles,
                                 const AttentionMask* mask = nullptr);

struct FlopsReport {
    std::size_t n_full = 0;
    std::size_t n_unique = 0;
    int d_total = 0;
    double full_mflops = 0.0; // n^2 * D / 1e6
    double vtu_mflops = 0.0;  // 2 * n_un^2 * D / 1e6

    static std::string csv_header();
    std::string csv_line() const;
};

FlopsReport flops_model(std::size_t n, std::size_t n_un, int heads, int head_dim);

// Rounds to 4 significant digits, then prints with one decimal.
std::string format_mflops(double v);

} // namespace dyntok
