#include "dyntok/nn.hpp"

#include <cmath>
#include <random>

namespace dyntok {

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

TokenMatrix linear(const TokenMatrix& x, const TokenMatrix& w,
                   const std::vector<double>& b) {
    if (x.cols != w.rows)
        throw ShapeError("linear: inner dimensions do not match");
    if (!b.empty() && b.size() != w.cols)
        throw ShapeError("linear: bias size does not match output dimension");
    TokenMatrix y(x.rows, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* yi = y.row(i);
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double v = xi[k];
            const double* wk = w.row(k);
            for (std::size_t j = 0; j < w.cols; ++j)
                yi[j] += v * wk[j];
        }
        if (!b.empty())
            for (std::size_t j = 0; j < w.cols; ++j)
                yi[j] += b[j];
    }
    return y;
}

TokenMatrix layer_norm(const TokenMatrix& x, const LayerNormParams& p) {
    if (p.gamma.size() != x.cols || p.beta.size() != x.cols)
        throw ShapeError("layer_norm: parameter size does not match columns");
    TokenMatrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double mean = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c)
            mean += xi[c];
        mean /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) {
            const double d = xi[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(var + p.eps);
        double* yi = y.row(i);
        for (std::size_t c = 0; c < x.cols; ++c)
            yi[c] = (xi[c] - mean) * inv * p.gamma[c] + p.beta[c];
    }
    return y;
}

TokenMatrix mlp_forward(const TokenMatrix& x, const MlpWeights& w) {
    TokenMatrix h = linear(x, w.w1, w.b1);
    for (double& v : h.data)
        v = gelu(v);
    return linear(h, w.w2, w.b2);
}

void softmax_rows_inplace(TokenMatrix& logits) {
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double* row = logits.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j)
            if (row[j] > mx) mx = row[j];
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < logits.cols; ++j)
            row[j] *= inv;
    }
}

TokenMatrix head_slice(const TokenMatrix& x, int head, int head_dim) {
    const std::size_t off = static_cast<std::size_t>(head) * static_cast<std::size_t>(head_dim);
    if (off + static_cast<std::size_t>(head_dim) > x.cols)
        throw ShapeError("head_slice: slice out of range");
    TokenMatrix y(x.rows, static_cast<std::size_t>(head_dim));
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i) + off;
        double* yi = y.row(i);
        for (int c = 0; c < head_dim; ++c)
            yi[c] = xi[c];
    }
    return y;
}

namespace {

void fill_normal(std::mt19937_64& rng, std::vector<double>& v, double scale) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& x : v)
        x = dist(rng) * scale;
}

TokenMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                          double scale) {
    TokenMatrix m(r, c);
    fill_normal(rng, m.data, scale);
    return m;
}

} // namespace

AttentionWeights make_attention_weights(int dim, int heads, std::uint64_t seed) {
    if (dim <= 0 || heads <= 0 || dim % heads != 0)
        throw ConfigError("make_attention_weights: dim must be a positive multiple of heads");
    std::mt19937_64 rng(seed);
    const auto d = static_cast<std::size_t>(dim);
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    AttentionWeights w;
    w.heads = heads;
    w.wq = random_matrix(rng, d, d, s);
    w.wk = random_matrix(rng, d, d, s);
    w.wv = random_matrix(rng, d, d, s);
    w.wo = random_matrix(rng, d, d, s);
    w.bq.assign(d, 0.0);
    w.bk.assign(d, 0.0);
    w.bv.assign(d, 0.0);
    w.bo.assign(d, 0.0);
    return w;
}

DecoderLayerWeights make_decoder_weights(int dim, int heads, int hidden,
                                         std::uint64_t seed) {
    if (hidden <= 0)
        throw ConfigError("make_decoder_weights: hidden must be positive");
    std::mt19937_64 rng(seed);
    const auto d = static_cast<std::size_t>(dim);
    const auto h = static_cast<std::size_t>(hidden);
    DecoderLayerWeights w;
    w.ln1.gamma.assign(d, 1.0);
    w.ln1.beta.assign(d, 0.0);
    w.ln2.gamma.assign(d, 1.0);
    w.ln2.beta.assign(d, 0.0);
    w.attn.heads = heads;
    if (dim <= 0 || heads <= 0 || dim % heads != 0)
        throw ConfigError("make_decoder_weights: dim must be a positive multiple of heads");
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    w.attn.wq = random_matrix(rng, d, d, s);
    w.attn.wk = random_matrix(rng, d, d, s);
    w.attn.wv = random_matrix(rng, d, d, s);
    w.attn.wo = random_matrix(rng, d, d, s);
    w.attn.bq.assign(d, 0.0);
    w.attn.bk.assign(d, 0.0);
    w.attn.bv.assign(d, 0.0);
    w.attn.bo.assign(d, 0.0);
    w.mlp.w1 = random_matrix(rng, d, h, s);
    w.mlp.b1.assign(h, 0.0);
    w.mlp.w2 = random_matrix(rng, h, d, 1.0 / std::sqrt(static_cast<double>(hidden)));
    w.mlp.b2.assign(d, 0.0);
    return w;
}

} // namespace dyntok
