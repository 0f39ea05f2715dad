#include "doctest.h"

#include <cmath>
#include <limits>

#include "dyntok/calibrate.hpp"
#include "dyntok/synth.hpp"

using namespace dyntok;

namespace {

ViTConfig cal_cfg(int layers) {
    ViTConfig cfg;
    cfg.layers = layers;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.patch = 4;
    cfg.grid_rows = 4;
    cfg.grid_cols = 4;
    cfg.cls = true;
    cfg.mlp_hidden = 16;
    return cfg;
}

std::vector<Image> noise_corpus(std::size_t count, std::uint64_t seed0) {
    std::vector<Image> v;
    for (std::size_t i = 0; i < count; ++i)
        v.push_back(bytes_to_image(synth_image(16, 16, 0, 0.35, seed0 + i), 16, 16));
    return v;
}

} // namespace

TEST_CASE("batched calibration meets its per-batch budget") {
    ViTWeights w = make_vit_weights(cal_cfg(3), 21);
    MemoryImageSource corpus(noise_corpus(8, 900));
    CalibrationOptions opt;
    opt.batch_size = 4;
    opt.num_batches = 2;
    opt.seed = 31;
    opt.corpus_id = "noise-8";
    CalibrationResult res = calibrate(w, corpus, {ScheduleKind::constant, 2}, opt);

    CHECK(res.targets == std::vector<int>{2, 2, 2});
    REQUIRE(res.profile.taus.size() == 3);
    REQUIRE(res.batch_taus.size() == 2);
    REQUIRE(res.batch_merged.size() == 2);
    REQUIRE(res.final_counts.size() == 8);

    for (int b = 0; b < 2; ++b) {
        for (int l = 0; l < 3; ++l) {
            CHECK(std::isfinite(res.batch_taus[b][l]));
            // distinct random scores: the pooled threshold admits exactly
            // batch_size * r_i edges across the batch
            CHECK(res.batch_merged[b][l] == 8);
        }
    }
    // bookkeeping: merged edges come straight off the final token counts
    std::size_t total = 0;
    for (std::size_t c : res.final_counts) total += c;
    CHECK(total == 8 * 17 - 2 * (8 + 8 + 8));
    CHECK(res.mean_final_tokens == doctest::Approx(11.0).epsilon(1e-12));

    for (int l = 0; l < 3; ++l)
        CHECK(res.profile.taus[l] == (res.batch_taus[0][l] + res.batch_taus[1][l]) / 2.0);

    CHECK(res.profile.batch_size == 4);
    CHECK(res.profile.num_batches == 2);
    CHECK(res.profile.corpus_id == "noise-8");
    CHECK(res.profile.schedule.kind == ScheduleKind::constant);
}

TEST_CASE("calibration is deterministic and thread count invariant") {
    ViTWeights w = make_vit_weights(cal_cfg(2), 22);
    MemoryImageSource corpus(noise_corpus(6, 500));
    CalibrationOptions opt;
    opt.batch_size = 3;
    opt.num_batches = 2;
    opt.seed = 7;
    CalibrationResult a = calibrate(w, corpus, {ScheduleKind::constant, 2}, opt);
    CalibrationResult b = calibrate(w, corpus, {ScheduleKind::constant, 2}, opt);
    CHECK(a.profile.taus == b.profile.taus);
    CHECK(a.final_counts == b.final_counts);

    opt.threads = 4;
    CalibrationResult c = calibrate(w, corpus, {ScheduleKind::constant, 2}, opt);
    CHECK(a.profile.taus == c.profile.taus);
    CHECK(a.final_counts == c.final_counts);
    CHECK(a.batch_taus == c.batch_taus);

    opt.threads = 1;
    opt.seed = 8; // different shuffle, different batches
    CalibrationResult d = calibrate(w, corpus, {ScheduleKind::constant, 2}, opt);
    CHECK(a.profile.taus != d.profile.taus);
}

TEST_CASE("zero budget calibrates to plus infinity") {
    ViTWeights w = make_vit_weights(cal_cfg(2), 23);
    MemoryImageSource corpus(noise_corpus(2, 600));
    CalibrationOptions opt;
    opt.batch_size = 2;
    CalibrationResult res = calibrate(w, corpus, {ScheduleKind::constant, 0}, opt);
    for (double t : res.profile.taus)
        CHECK(t == std::numeric_limits<double>::infinity());
    for (std::size_t m : res.batch_merged[0])
        CHECK(m == 0);
    for (std::size_t c : res.final_counts)
        CHECK(c == 17);
}

TEST_CASE("front loaded schedule leaves the last layer alone") {
    ViTWeights w = make_vit_weights(cal_cfg(3), 24);
    MemoryImageSource corpus(noise_corpus(4, 700));
    CalibrationOptions opt;
    opt.batch_size = 4;
    CalibrationResult res = calibrate(w, corpus, {ScheduleKind::linear, 2}, opt);
    CHECK(res.targets == std::vector<int>{4, 2, 0});
    CHECK(res.profile.taus[2] == std::numeric_limits<double>::infinity());
    CHECK(res.batch_merged[0][2] == 0);
    CHECK(res.batch_merged[0][0] == 16);
}

TEST_CASE("calibration rejects an undersized corpus") {
    ViTWeights w = make_vit_weights(cal_cfg(2), 25);
    MemoryImageSource corpus(noise_corpus(7, 800));
    CalibrationOptions opt;
    opt.batch_size = 4;
    opt.num_batches = 2;
    CHECK_THROWS_AS(calibrate(w, corpus, {ScheduleKind::constant, 1}, opt),
                    CalibrationError);
    opt.batch_size = 0;
    CHECK_THROWS_AS(calibrate(w, corpus, {ScheduleKind::constant, 1}, opt),
                    CalibrationError);
    CalibrationOptions ok;
    ok.batch_size = 1;
    ok.num_batches = 0;
    CHECK_THROWS_AS(calibrate(w, corpus, {ScheduleKind::constant, 1}, ok),
                    CalibrationError);
}

TEST_CASE("different corpora produce different thresholds") {
    ViTWeights w = make_vit_weights(cal_cfg(2), 26);
    std::vector<Image> flat;
    for (std::uint64_t i = 0; i < 4; ++i)
        flat.push_back(bytes_to_image(synth_image(16, 16, 0, 0.0, 40 + i), 16, 16));
    MemoryImageSource flat_src(flat);
    MemoryImageSource noise_src(noise_corpus(4, 41));
    CalibrationOptions opt;
    opt.batch_size = 4;
    CalibrationResult a = calibrate(w, flat_src, {ScheduleKind::constant, 2}, opt);
    CalibrationResult b = calibrate(w, noise_src, {ScheduleKind::constant, 2}, opt);
    CHECK(a.profile.taus != b.profile.taus);
    // near-duplicate content sits higher on the similarity scale
    CHECK(a.profile.taus[0] > b.profile.taus[0]);
}
