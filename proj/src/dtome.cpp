#include "dyntok/dtome.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dyntok/nn.hpp"

namespace dyntok {

BipartiteSplit split_alternating(std::size_t n, bool /*protect_first*/) {
    if (n < 2)
        throw ShapeError("split_alternating: need at least 2 tokens");
    BipartiteSplit s;
    s.set_a.reserve(n / 2);
    s.set_b.reserve(n - n / 2);
    for (std::size_t i = 0; i < n; ++i)
        (i % 2 == 1 ? s.set_a : s.set_b).push_back(i);
    return s;
}

EdgeSet bipartite_scores(const TokenMatrix& keys, const BipartiteSplit& split) {
    for (std::size_t i : split.set_a)
        if (i >= keys.rows)
            throw ShapeError("bipartite_scores: A index out of range");
    for (std::size_t i : split.set_b)
        if (i >= keys.rows)
            throw ShapeError("bipartite_scores: B index out of range");
    if (split.set_b.empty())
        throw ShapeError("bipartite_scores: destination side is empty");

    std::vector<double> norms(keys.rows);
    for (std::size_t i = 0; i < keys.rows; ++i) {
        double s = 0.0;
        const double* r = keys.row(i);
        for (std::size_t c = 0; c < keys.cols; ++c)
            s += r[c] * r[c];
        norms[i] = std::sqrt(s);
    }

    EdgeSet edges;
    edges.reserve(split.set_a.size());
    for (std::size_t a : split.set_a) {
        const double* ka = keys.row(a);
        double best = 0.0;
        std::size_t best_b = 0;
        bool have = false;
        for (std::size_t b : split.set_b) {
            const double* kb = keys.row(b);
            double dot = 0.0;
            for (std::size_t c = 0; c < keys.cols; ++c)
                dot += ka[c] * kb[c];
            const double den = norms[a] * norms[b];
            const double cosv = den > 0.0 ? dot / den : 0.0;
            if (!have || cosv > best) {
                best = cosv;
                best_b = b;
                have = true;
            }
        }
        edges.push_back({a, best_b, best});
    }
    return edges;
}

EdgeSet select_edges_threshold(const EdgeSet& edges, double tau) {
    EdgeSet out;
    for (const Edge& e : edges)
        if (e.score >= tau)
            out.push_back(e);
    return out;
}

EdgeSet select_edges_topr(const EdgeSet& edges, std::size_t r) {
    std::vector<std::size_t> idx(edges.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        if (edges[i].score != edges[j].score)
            return edges[i].score > edges[j].score;
        return edges[i].src < edges[j].src;
    });
    if (r < idx.size())
        idx.resize(r);
    std::sort(idx.begin(), idx.end());
    EdgeSet out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(edges[i]);
    return out;
}

MergeStep apply_merge(const TokenMatrix& x, const SizeVector& layer_sizes,
                      const EdgeSet& selected) {
    const std::size_t n = x.rows;
    if (layer_sizes.size() != n)
        throw ShapeError("apply_merge: sizes length does not match rows");
    for (std::size_t s : layer_sizes)
        if (s == 0)
            throw ShapeError("apply_merge: sizes must be positive");

    std::vector<char> is_src(n, 0);
    for (const Edge& e : selected) {
        if (e.src >= n || e.dst >= n)
            throw ShapeError("apply_merge: edge index out of range");
        if (e.src == e.dst)
            throw ShapeError("apply_merge: edge with src == dst");
        if (is_src[e.src])
            throw ShapeError("apply_merge: duplicate source");
        is_src[e.src] = 1;
    }
    for (const Edge& e : selected)
        if (is_src[e.dst])
            throw ShapeError("apply_merge: destination is also a source");

    TokenMatrix work = x;
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i)
        weight[i] = static_cast<double>(layer_sizes[i]);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i)
        members[i] = {i};

    EdgeSet order = selected;
    std::sort(order.begin(), order.end(),
              [](const Edge& a, const Edge& b) { return a.src < b.src; });
    for (const Edge& e : order) {
        const double ws = weight[e.src];
        const double wd = weight[e.dst];
        const double inv = 1.0 / (ws + wd);
        const double* src = work.row(e.src);
        double* dst = work.row(e.dst);
        for (std::size_t c = 0; c < work.cols; ++c)
            dst[c] = (src[c] * ws + dst[c] * wd) * inv;
        weight[e.dst] = ws + wd;
        members[e.dst].push_back(e.src);
    }

    struct Kept {
        std::size_t row;
        std::vector<std::size_t> group;
    };
    std::vector<Kept> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_src[i]) continue;
        std::sort(members[i].begin(), members[i].end());
        kept.push_back({i, std::move(members[i])});
    }
    std::sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
        return a.group.front() < b.group.front();
    });

    TokenMatrix out(kept.size(), x.cols);
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const double* src = work.row(kept[j].row);
        double* dst = out.row(j);
        for (std::size_t c = 0; c < x.cols; ++c)
            dst[c] = src[c];
        groups.push_back(std::move(kept[j].group));
    }
    return {std::move(out), MergeMap(n, std::move(groups))};
}

TokenMatrix size_weighted_attention(const TokenMatrix& q, const TokenMatrix& k,
                                    const TokenMatrix& v, const SizeVector& sizes,
                                    double scale) {
    if (q.cols != k.cols)
        throw ShapeError("size_weighted_attention: q/k dims differ");
    if (k.rows != v.rows || k.rows != sizes.size())
        throw ShapeError("size_weighted_attention: key count mismatch");
    for (std::size_t s : sizes)
        if (s == 0)
            throw ShapeError("size_weighted_attention: sizes must be positive");

    std::vector<double> logsz(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j)
        logsz[j] = std::log(static_cast<double>(sizes[j]));

    TokenMatrix logits(q.rows, k.rows);
    for (std::size_t i = 0; i < q.rows; ++i) {
        const double* qi = q.row(i);
        double* li = logits.row(i);
        for (std::size_t j = 0; j < k.rows; ++j) {
            const double* kj = k.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < q.cols; ++c)
                dot += qi[c] * kj[c];
            li[j] = dot * scale + logsz[j];
        }
    }
    softmax_rows_inplace(logits);

    TokenMatrix out(q.rows, v.cols);
    for (std::size_t i = 0; i < q.rows; ++i) {
        const double* wi = logits.row(i);
        double* oi = out.row(i);
        for (std::size_t j = 0; j < k.rows; ++j) {
            const double w = wi[j];
            const double* vj = v.row(j);
            for (std::size_t c = 0; c < v.cols; ++c)
                oi[c] += w * vj[c];
        }
    }
    return out;
}

} // namespace dyntok
