#pragma once

#include <cstdint>
#include <vector>

#include "dyntok/token_matrix.hpp"

namespace dyntok {

struct LayerNormParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    double eps = 1e-5;
};

struct AttentionWeights {
    int heads = 1;
    TokenMatrix wq, wk, wv, wo;          // each d x d
    std::vector<double> bq, bk, bv, bo;  // each d

    int dim() const { return static_cast<int>(wq.rows); }
    int head_dim() const { return dim() / heads; }
};

struct MlpWeights {
    TokenMatrix w1;          // d x hidden
    std::vector<double> b1;
    TokenMatrix w2;          // hidden x d
    std::vector<double> b2;
};

struct DecoderLayerWeights {
    LayerNormParams ln1;
    AttentionWeights attn;
    LayerNormParams ln2;
    MlpWeights mlp;
};

double gelu(double x);

// y = x * w + b, x is n x d_in, w is d_in x d_out.
TokenMatrix linear(const TokenMatrix& x, const TokenMatrix& w,
                   const std::vector<double>& b);

TokenMatrix layer_norm(const TokenMatrix& x, const LayerNormParams& p);

TokenMatrix mlp_forward(const TokenMatrix& x, const MlpWeights& w);

// Row-wise softmax with max subtraction, in place. -inf entries become 0.
void softmax_rows_inplace(TokenMatrix& logits);

// Copy of columns [head*head_dim, (head+1)*head_dim) of x.
TokenMatrix head_slice(const TokenMatrix& x, int head, int head_dim);

// Seeded dense init, N(0, scale^2) entries drawn in a fixed order.
AttentionWeights make_attention_weights(int dim, int heads, std::uint64_t seed);
DecoderLayerWeights make_decoder_weights(int dim, int heads, int hidden,
                                         std::uint64_t seed);

} // namespace dyntok
