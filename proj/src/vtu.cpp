#include "dyntok/vtu.hpp"

#include <cmath>
#include <cstdio>

namespace dyntok {

double rope_similarity_entry(double q1, double q2, double k1, double k2,
                             double dtheta) {
    return (q1 * k1 + q2 * k2) * std::cos(dtheta) +
           (q1 * k2 - q2 * k1) * std::sin(dtheta);
}

GramPair gram_pair(const TokenMatrix& q_un, const TokenMatrix& k_un) {
    if (q_un.cols != k_un.cols)
        throw ShapeError("gram_pair: column counts differ");
    if (q_un.cols == 0 || q_un.cols % 2 != 0)
        throw ShapeError("gram_pair: head dimension must be even");
    const std::size_t half = q_un.cols / 2;
    GramPair g{TokenMatrix(q_un.rows, k_un.rows), TokenMatrix(q_un.rows, k_un.rows)};
    for (std::size_t i = 0; i < q_un.rows; ++i) {
        const double* qi = q_un.row(i);
        for (std::size_t j = 0; j < k_un.rows; ++j) {
            const double* kj = k_un.row(j);
            double dot = 0.0, cross = 0.0;
            for (std::size_t k = 0; k < half; ++k) {
                const double q1 = qi[2 * k], q2 = qi[2 * k + 1];
                const double k1 = kj[2 * k], k2 = kj[2 * k + 1];
                dot += q1 * k1 + q2 * k2;
                cross += q1 * k2 - q2 * k1;
            }
            g.qk.at(i, j) = dot;
            g.qxk.at(i, j) = cross;
        }
    }
    return g;
}

TokenMatrix vtu_similarity(const TokenMatrix& q_un, const TokenMatrix& k_un,
                           const MergeMap& map, const RopeAngles& angles,
                           SimilarityStats* stats) {
    if (q_un.cols != k_un.cols)
        throw ShapeError("vtu_similarity: column counts differ");
    if (q_un.rows != map.group_count() || k_un.rows != map.group_count())
        throw ShapeError("vtu_similarity: row count does not match group count");
    if (static_cast<int>(q_un.cols) != angles.head_dim)
        throw ShapeError("vtu_similarity: head dimension does not match angles");
    if (angles.n_positions < map.n_full())
        throw ShapeError("vtu_similarity: angle table shorter than sequence");

    const std::size_t n = map.n_full();
    const std::size_t nu = map.group_count();
    const std::size_t half = q_un.cols / 2;

    // Per-component gram partials, pair-major so the assembly loop streams
    // a contiguous run of components for each (group, group) pair.
    std::vector<double> g(nu * nu * half);
    std::vector<double> x(nu * nu * half);
    for (std::size_t i = 0; i < nu; ++i) {
        const double* qi = q_un.row(i);
        for (std::size_t j = 0; j < nu; ++j) {
            const double* kj = k_un.row(j);
            double* gp = g.data() + (i * nu + j) * half;
            double* xp = x.data() + (i * nu + j) * half;
            for (std::size_t k = 0; k < half; ++k) {
                const double q1 = qi[2 * k], q2 = qi[2 * k + 1];
                const double k1 = kj[2 * k], k2 = kj[2 * k + 1];
                gp[k] = q1 * k1 + q2 * k2;
                xp[k] = q1 * k2 - q2 * k1;
            }
        }
    }
    if (stats)
        stats->gram_mults += static_cast<std::uint64_t>(nu) * nu * half * 4;

    std::vector<double> cosT(n * half), sinT(n * half);
    for (std::size_t p = 0; p < n; ++p) {
        const double* th = angles.pos_row(p);
        for (std::size_t k = 0; k < half; ++k) {
            cosT[p * half + k] = std::cos(th[k]);
            sinT[p * half + k] = std::sin(th[k]);
        }
    }

    std::vector<std::size_t> gof(n);
    for (std::size_t p = 0; p < n; ++p)
        gof[p] = map.group_of(p);

    TokenMatrix a(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        const double* cp = cosT.data() + p * half;
        const double* sp = sinT.data() + p * half;
        const std::size_t gp_row = gof[p] * nu;
        double* ap = a.row(p);
        for (std::size_t q = 0; q < n; ++q) {
            const double* cq = cosT.data() + q * half;
            const double* sq = sinT.data() + q * half;
            const double* gv = g.data() + (gp_row + gof[q]) * half;
            const double* xv = x.data() + (gp_row + gof[q]) * half;
            double acc = 0.0;
            for (std::size_t k = 0; k < half; ++k) {
                const double c = cp[k] * cq[k] + sp[k] * sq[k]; // cos(th_p - th_q)
                const double s = sp[k] * cq[k] - cp[k] * sq[k]; // sin(th_p - th_q)
                acc += c * gv[k] + s * xv[k];
            }
            ap[q] = acc;
        }
    }
    if (stats)
        stats->assembly_mults += static_cast<std::uint64_t>(n) * n * half * 6;
    return a;
}

UniqueSequence vtu_attention(const UniqueSequence& seq, const AttentionWeights& w,
                             const RopeAngles& angles, const AttentionMask* mask,
                             SimilarityStats* stats) {
    const std::size_t d = static_cast<std::size_t>(w.dim());
    if (seq.e_un.cols != d)
        throw ShapeError("vtu_attention: model dimension mismatch");
    if (seq.e_un.rows != seq.map.group_count())
        throw ShapeError("vtu_attention: rows do not match map");
    if (w.heads <= 0 || d % static_cast<std::size_t>(w.heads) != 0)
        throw ShapeError("vtu_attention: heads must divide dim");
    const int hd = w.head_dim();
    if (angles.head_dim != hd)
        throw ShapeError("vtu_attention: angle head dimension mismatch");
    const std::size_t n = seq.map.n_full();
    const std::size_t nu = seq.map.group_count();
    if (mask && mask->n != n)
        throw ShapeError("vtu_attention: mask size must be n_full");

    const TokenMatrix q_un = linear(seq.e_un, w.wq, w.bq);
    const TokenMatrix k_un = linear(seq.e_un, w.wk, w.bk);
    const TokenMatrix v_un = linear(seq.e_un, w.wv, w.bv);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<std::size_t> gof(n);
    for (std::size_t p = 0; p < n; ++p)
        gof[p] = seq.map.group_of(p);
    const SizeVector szs = seq.map.sizes();

    TokenMatrix concat(nu, d);
    for (int head = 0; head < w.heads; ++head) {
        const TokenMatrix qh = head_slice(q_un, head, hd);
        const TokenMatrix kh = head_slice(k_un, head, hd);
        const TokenMatrix vh = head_slice(v_un, head, hd);

        TokenMatrix a = vtu_similarity(qh, kh, seq.map, angles, stats);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            a.data[i] *= scale;
        if (mask)
            for (std::size_t i = 0; i < a.data.size(); ++i)
                a.data[i] += mask->add[i];
        softmax_rows_inplace(a);

        // Group-average the softmax rows, then group-sum its columns; the
        // small matrix that remains multiplies the unique values directly, so
        // no n x head_dim intermediate is ever formed.
        TokenMatrix abar(nu, n);
        for (std::size_t p = 0; p < n; ++p) {
            const double* ap = a.row(p);
            double* bp = abar.row(gof[p]);
            for (std::size_t q = 0; q < n; ++q)
                bp[q] += ap[q];
        }
        for (std::size_t j = 0; j < nu; ++j) {
            const double inv = 1.0 / static_cast<double>(szs[j]);
            double* bp = abar.row(j);
            for (std::size_t q = 0; q < n; ++q)
                bp[q] *= inv;
        }
        TokenMatrix s(nu, nu);
        for (std::size_t j = 0; j < nu; ++j) {
            const double* bp = abar.row(j);
            double* sp = s.row(j);
            for (std::size_t q = 0; q < n; ++q)
                sp[gof[q]] += bp[q];
        }

        const std::size_t off = static_cast<std::size_t>(head) * static_cast<std::size_t>(hd);
        for (std::size_t i = 0; i < nu; ++i) {
            const double* si = s.row(i);
            double* ci = concat.row(i) + off;
            for (std::size_t j = 0; j < nu; ++j) {
                const double wv = si[j];
                const double* vj = vh.row(j);
                for (int c = 0; c < hd; ++c)
                    ci[c] += wv * vj[c];
            }
        }
        if (stats)
            stats->attn_mults += static_cast<std::uint64_t>(n) * n * 2 +
                                 static_cast<std::uint64_t>(nu) * n +
                                 static_cast<std::uint64_t>(nu) * nu *
                                     static_cast<std::uint64_t>(hd);
    }

    UniqueSequence out{linear(concat, w.wo, w.bo), seq.map};
    return out;
}

UniqueSequence decoder_layer_vtu(const UniqueSequence& seq,
                                 const DecoderLayerWeights& w,
                                 const RopeAngles& angles,
                                 const AttentionMask* mask) {
    UniqueSequence h = lift_pointwise(
        [&](const TokenMatrix& m) { return layer_norm(m, w.ln1); }, seq);
    UniqueSequence attn = vtu_attention(h, w.attn, angles, mask);
    UniqueSequence x{seq.e_un, seq.map};
    for (std::size_t i = 0; i < x.e_un.data.size(); ++i)
        x.e_un.data[i] += attn.e_un.data[i];

    UniqueSequence h2 = lift_pointwise(
        [&](const TokenMatrix& m) { return layer_norm(m, w.ln2); }, x);
    const TokenMatrix m = mlp_forward(h2.e_un, w.mlp);
    for (std::size_t i = 0; i < x.e_un.data.size(); ++i)
        x.e_un.data[i] += m.data[i];
    return x;
}

std::string FlopsReport::csv_header() {
    return "n_full,n_unique,d_total,full_mflops,vtu_mflops";
}

std::string FlopsReport::csv_line() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%d,%s,%s", n_full, n_unique, d_total,
                  format_mflops(full_mflops).c_str(),
                  format_mflops(vtu_mflops).c_str());
    return buf;
}

FlopsReport flops_model(std::size_t n, std::size_t n_un, int heads, int head_dim) {
    FlopsReport r;
    r.n_full = n;
    r.n_unique = n_un;
    r.d_total = heads * head_dim;
    const double d = static_cast<double>(r.d_total);
    r.full_mflops = static_cast<double>(n) * static_cast<double>(n) * d / 1e6;
    r.vtu_mflops = 2.0 * static_cast<double>(n_un) * static_cast<double>(n_un) * d / 1e6;
    return r;
}

std::string format_mflops(double v) {
    double r = v;
    if (v != 0.0) {
        const double mag = std::floor(std::log10(std::fabs(v)));
        const double scale = std::pow(10.0, mag - 3.0);
        r = std::round(v / scale) * scale;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", r);
    return buf;
}

} // namespace dyntok
