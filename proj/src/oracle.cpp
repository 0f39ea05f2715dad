#include "dyntok/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace dyntok::oracle {

namespace {

// Deliberately separate from the library kernels: plain dot-product loops.
TokenMatrix proj(const TokenMatrix& x, const TokenMatrix& w,
                 const std::vector<double>& b) {
    if (x.cols != w.rows)
        throw ShapeError("oracle proj: inner dimensions do not match");
    TokenMatrix y(x.rows, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < w.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x.cols; ++k)
                acc += x.at(i, k) * w.at(k, j);
            y.at(i, j) = acc + (b.empty() ? 0.0 : b[j]);
        }
    }
    return y;
}

std::vector<double> softmax_vec(const std::vector<double>& logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits)
        if (v > mx) mx = v;
    std::vector<double> w(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        w[j] = std::exp(logits[j] - mx);
        sum += w[j];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

} // namespace

TokenMatrix full_rope_attention(const TokenMatrix& e, const RopeAngles& angles,
                                const AttentionWeights& w,
                                const AttentionMask* mask) {
    const std::size_t d = static_cast<std::size_t>(w.dim());
    if (e.cols != d)
        throw ShapeError("full_rope_attention: model dimension mismatch");
    if (w.heads <= 0 || d % static_cast<std::size_t>(w.heads) != 0)
        throw ShapeError("full_rope_attention: heads must divide dim");
    const int hd = w.head_dim();
    if (angles.head_dim != hd)
        throw ShapeError("full_rope_attention: angle head dimension mismatch");
    const std::size_t n = e.rows;
    if (angles.n_positions < n)
        throw ShapeError("full_rope_attention: angle table shorter than sequence");
    if (mask && mask->n != n)
        throw ShapeError("full_rope_attention: mask size mismatch");

    const TokenMatrix q = proj(e, w.wq, w.bq);
    const TokenMatrix k = proj(e, w.wk, w.bk);
    const TokenMatrix v = proj(e, w.wv, w.bv);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const std::size_t half = static_cast<std::size_t>(hd) / 2;

    TokenMatrix concat(n, d);
    for (int head = 0; head < w.heads; ++head) {
        const std::size_t off = static_cast<std::size_t>(head) * static_cast<std::size_t>(hd);
        TokenMatrix qrot(n, static_cast<std::size_t>(hd));
        TokenMatrix krot(n, static_cast<std::size_t>(hd));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < half; ++c) {
                const double th = angles.at(i, static_cast<int>(c));
                const double co = std::cos(th), si = std::sin(th);
                const double q1 = q.at(i, off + 2 * c), q2 = q.at(i, off + 2 * c + 1);
                qrot.at(i, 2 * c) = q1 * co - q2 * si;
                qrot.at(i, 2 * c + 1) = q1 * si + q2 * co;
                const double k1 = k.at(i, off + 2 * c), k2 = k.at(i, off + 2 * c + 1);
                krot.at(i, 2 * c) = k1 * co - k2 * si;
                krot.at(i, 2 * c + 1) = k1 * si + k2 * co;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> logits(n);
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int c = 0; c < hd; ++c)
                    dot += qrot.at(i, static_cast<std::size_t>(c)) *
                           krot.at(j, static_cast<std::size_t>(c));
                logits[j] = dot * scale + (mask ? mask->at(i, j) : 0.0);
            }
            const std::vector<double> sw = softmax_vec(logits);
            for (int c = 0; c < hd; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += sw[j] * v.at(j, off + static_cast<std::size_t>(c));
                concat.at(i, off + static_cast<std::size_t>(c)) = acc;
            }
        }
    }
    return proj(concat, w.wo, w.bo);
}

TokenMatrix reference_vtu(const UniqueSequence& seq, const AttentionWeights& w,
                          const RopeAngles& angles, const AttentionMask* mask) {
    const TokenMatrix e = expand(seq.map, seq.e_un);
    const TokenMatrix full = full_rope_attention(e, angles, w, mask);
    return remerge_average(seq.map, full);
}

std::vector<double> duplicated_attention(const std::vector<double>& q_row,
                                         const TokenMatrix& k_un,
                                         const TokenMatrix& v_un,
                                         const SizeVector& sizes, double scale) {
    if (q_row.size() != k_un.cols)
        throw ShapeError("duplicated_attention: query dimension mismatch");
    if (k_un.rows != v_un.rows || k_un.rows != sizes.size())
        throw ShapeError("duplicated_attention: key count mismatch");

    std::vector<double> logits;
    std::vector<std::size_t> owner;
    for (std::size_t j = 0; j < k_un.rows; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < k_un.cols; ++c)
            dot += q_row[c] * k_un.at(j, c);
        for (std::size_t rep = 0; rep < sizes[j]; ++rep) {
            logits.push_back(dot * scale);
            owner.push_back(j);
        }
    }
    const std::vector<double> sw = softmax_vec(logits);
    std::vector<double> out(v_un.cols, 0.0);
    for (std::size_t t = 0; t < sw.size(); ++t)
        for (std::size_t c = 0; c < v_un.cols; ++c)
            out[c] += sw[t] * v_un.at(owner[t], c);
    return out;
}

double reference_threshold(const std::vector<double>& scores, std::size_t k) {
    if (k == 0)
        return std::numeric_limits<double>::infinity();
    if (k >= scores.size())
        return -std::numeric_limits<double>::infinity();
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    return sorted[k - 1];
}

} // namespace dyntok::oracle
