#include "dyntok/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dyntok/dtome.hpp"
#include "dyntok/parallel.hpp"

namespace dyntok {

CalibrationResult calibrate(const ViTWeights& encoder, const ImageSource& corpus,
                            const MergeSchedule& schedule,
                            const CalibrationOptions& opt) {
    const ViTConfig& cfg = encoder.cfg;
    cfg.validate();
    if (opt.batch_size < 1)
        throw CalibrationError("calibrate: batch_size must be >= 1");
    if (opt.num_batches < 1)
        throw CalibrationError("calibrate: num_batches must be >= 1");
    const std::size_t need =
        static_cast<std::size_t>(opt.batch_size) * static_cast<std::size_t>(opt.num_batches);
    if (corpus.size() == 0)
        throw CalibrationError("calibrate: empty corpus");
    if (corpus.size() < need)
        throw CalibrationError("calibrate: corpus smaller than batch_size * num_batches");

    const std::vector<int> targets = schedule_targets(schedule, cfg.layers);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(opt.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(need);

    const auto B = static_cast<std::size_t>(opt.batch_size);
    const auto L = static_cast<std::size_t>(cfg.layers);

    CalibrationResult res;
    res.targets = targets;
    res.batch_taus.assign(static_cast<std::size_t>(opt.num_batches),
                          std::vector<double>(L, 0.0));
    res.batch_merged.assign(static_cast<std::size_t>(opt.num_batches),
                            std::vector<std::size_t>(L, 0));
    res.final_counts.reserve(need);

    struct ImageState {
        TokenMatrix x;
        MergeMap map = MergeMap::identity(1);
        EdgeSet edges;
        TokenMatrix keys;
    };

    for (int b = 0; b < opt.num_batches; ++b) {
        std::vector<ImageState> state(B);
        parallel_for(B, opt.threads, [&](std::size_t i) {
            const Image img = corpus.load(order[static_cast<std::size_t>(b) * B + i]);
            state[i].x = patchify(img, encoder);
            state[i].map = MergeMap::identity(state[i].x.rows);
        });

        for (std::size_t layer = 0; layer < L; ++layer) {
            parallel_for(B, opt.threads, [&](std::size_t i) {
                ImageState& st = state[i];
                const SizeVector sz = st.map.sizes();
                AttentionStep step = vit_attention_block(st.x, sz, encoder.blocks[layer], cfg.heads);
                st.x = std::move(step.x);
                st.keys = std::move(step.merge_keys);
                st.edges.clear();
                if (st.x.rows >= 2)
                    st.edges = bipartite_scores(st.keys, split_alternating(st.x.rows, cfg.cls));
            });

            std::vector<double> pool;
            for (const ImageState& st : state)
                for (const Edge& e : st.edges)
                    pool.push_back(e.score);

            const std::size_t k = B * static_cast<std::size_t>(targets[layer]);
            const double tau = calibrate_layer(pool, k);
            res.batch_taus[static_cast<std::size_t>(b)][layer] = tau;

            std::vector<std::size_t> merged(B, 0);
            parallel_for(B, opt.threads, [&](std::size_t i) {
                ImageState& st = state[i];
                const EdgeSet selected = select_edges_threshold(st.edges, tau);
                merged[i] = selected.size();
                if (!selected.empty()) {
                    const SizeVector sz = st.map.sizes();
                    MergeStep ms = apply_merge(st.x, sz, selected);
                    st.x = std::move(ms.tokens);
                    st.map = compose(ms.map, st.map);
                }
                st.x = vit_mlp_block(st.x, encoder.blocks[layer]);
            });
            res.batch_merged[static_cast<std::size_t>(b)][layer] =
                std::accumulate(merged.begin(), merged.end(), std::size_t{0});
        }

        for (const ImageState& st : state)
            res.final_counts.push_back(st.x.rows);
    }

    res.profile.taus.resize(L);
    for (std::size_t layer = 0; layer < L; ++layer) {
        double sum = 0.0;
        int finite = 0;
        for (int b = 0; b < opt.num_batches; ++b) {
            const double t = res.batch_taus[static_cast<std::size_t>(b)][layer];
            if (std::isfinite(t)) {
                sum += t;
                ++finite;
            }
        }
        res.profile.taus[layer] =
            finite > 0 ? sum / finite : res.batch_taus[0][layer];
    }
    res.profile.schedule = schedule;
    res.profile.batch_size = opt.batch_size;
    res.profile.num_batches = opt.num_batches;
    res.profile.corpus_id = opt.corpus_id;

    double total = 0.0;
    for (std::size_t c : res.final_counts)
        total += static_cast<double>(c);
    res.mean_final_tokens = total / static_cast<double>(res.final_counts.size());
    return res;
}

} // namespace dyntok
