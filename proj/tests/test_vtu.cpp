#include "doctest.h"

#include <cmath>
#include <random>

#include "dyntok/nn.hpp"
#include "dyntok/oracle.hpp"
#include "dyntok/sampling.hpp"
#include "dyntok/vtu.hpp"
#include "test_util.hpp"

using namespace dyntok;

static const double kPi = 3.14159265358979323846;

TEST_CASE("similarity entry follows the rotation identity") {
    CHECK(rope_similarity_entry(1, 0, 1, 0, kPi / 2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(rope_similarity_entry(1, 0, 0, 1, kPi / 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rope_similarity_entry(0.3, -0.7, 0.2, 0.9, 0.0) ==
          doctest::Approx(0.3 * 0.2 + (-0.7) * 0.9).epsilon(1e-15));

    // matches explicitly rotating both vectors to positions p and q
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int it = 0; it < 30; ++it) {
        double q1 = u(rng), q2 = u(rng), k1 = u(rng), k2 = u(rng);
        double tp = u(rng), tq = u(rng);
        double qr1 = q1 * std::cos(tp) - q2 * std::sin(tp);
        double qr2 = q1 * std::sin(tp) + q2 * std::cos(tp);
        double kr1 = k1 * std::cos(tq) - k2 * std::sin(tq);
        double kr2 = k1 * std::sin(tq) + k2 * std::cos(tq);
        double want = qr1 * kr1 + qr2 * kr2;
        CHECK(rope_similarity_entry(q1, q2, k1, k2, tp - tq) ==
              doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("gram pair on two dimensional rows") {
    TokenMatrix q(1, 2, {1, 0});
    TokenMatrix k_same(1, 2, {1, 0});
    GramPair g = gram_pair(q, k_same);
    CHECK(g.qk.at(0, 0) == 1.0);
    CHECK(g.qxk.at(0, 0) == 0.0);

    TokenMatrix k_rot(1, 2, {0, 1});
    GramPair h = gram_pair(q, k_rot);
    CHECK(h.qk.at(0, 0) == 0.0);
    CHECK(h.qxk.at(0, 0) == 1.0);

    CHECK_THROWS_AS(gram_pair(TokenMatrix(1, 3), TokenMatrix(1, 3)), ShapeError);
    CHECK_THROWS_AS(gram_pair(TokenMatrix(1, 2), TokenMatrix(1, 4)), ShapeError);
}

TEST_CASE("cross gram of a matrix with itself is antisymmetric") {
    std::mt19937_64 rng(31);
    TokenMatrix q = random_tokens(rng, 6, 8);
    GramPair g = gram_pair(q, q);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(g.qxk.at(i, i) == doctest::Approx(0.0).epsilon(1e-12));
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(g.qxk.at(i, j) == doctest::Approx(-g.qxk.at(j, i)).epsilon(1e-12));
    }
}

static RopeAngles zero_angles(int head_dim, std::size_t n) {
    RopeAngles a;
    a.head_dim = head_dim;
    a.n_positions = n;
    a.theta.assign(n * static_cast<std::size_t>(head_dim / 2), 0.0);
    return a;
}

TEST_CASE("similarity with identity map and zero angles is the plain gram") {
    std::mt19937_64 rng(37);
    TokenMatrix q = random_tokens(rng, 5, 6);
    TokenMatrix k = random_tokens(rng, 5, 6);
    MergeMap id = MergeMap::identity(5);
    TokenMatrix a = vtu_similarity(q, k, id, zero_angles(6, 5));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < 6; ++c) dot += q.at(i, c) * k.at(j, c);
            CHECK(a.at(i, j) == doctest::Approx(dot).epsilon(1e-12));
        }
}

TEST_CASE("similarity reconstructs rotated duplicates at their own positions") {
    std::mt19937_64 rng(43);
    RopeAngles angles = make_rope_angles({4, 100.0}, 2);
    TokenMatrix q = random_tokens(rng, 1, 4);
    TokenMatrix k = random_tokens(rng, 1, 4);
    MergeMap both(2, {{0, 1}});
    TokenMatrix a = vtu_similarity(q, k, both, angles);
    REQUIRE(a.rows == 2);
    // same underlying rows, different positions: entries must differ
    CHECK(std::fabs(a.at(0, 0) - a.at(0, 1)) > 1e-9);
    CHECK(std::fabs(a.at(0, 0) - a.at(1, 0)) > 1e-9);
    // zero offset on the diagonal: plain dot both times
    double dot = 0.0;
    for (std::size_t c = 0; c < 4; ++c) dot += q.at(0, c) * k.at(0, c);
    CHECK(a.at(0, 0) == doctest::Approx(dot).epsilon(1e-12));
    CHECK(a.at(1, 1) == doctest::Approx(dot).epsilon(1e-12));
}

TEST_CASE("similarity equals the expanded rotated gram") {
    std::mt19937_64 rng(47);
    for (int it = 0; it < 10; ++it) {
        std::size_t n = 2 + static_cast<std::size_t>(rng() % 20);
        std::size_t nu = 1 + static_cast<std::size_t>(rng() % n);
        int hd = (it % 2 == 0) ? 4 : 8;
        MergeMap map = random_merge_map(rng, n, nu);
        TokenMatrix q = random_tokens(rng, nu, static_cast<std::size_t>(hd));
        TokenMatrix k = random_tokens(rng, nu, static_cast<std::size_t>(hd));
        RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
        TokenMatrix got = vtu_similarity(q, k, map, angles);
        TokenMatrix want = testutil::naive_rope_similarity(q, k, map, angles);
        CHECK(rel_frob_error(got, want) <= 1e-10);
    }
}

TEST_CASE("similarity multiplication counters are exact") {
    std::mt19937_64 rng(51);
    std::size_t n = 17, nu = 6;
    int hd = 8;
    MergeMap map = random_merge_map(rng, n, nu);
    TokenMatrix q = random_tokens(rng, nu, static_cast<std::size_t>(hd));
    TokenMatrix k = random_tokens(rng, nu, static_cast<std::size_t>(hd));
    SimilarityStats st;
    vtu_similarity(q, k, map, make_rope_angles({hd, 10000.0}, n), &st);
    CHECK(st.gram_mults == 2ull * nu * nu * static_cast<std::size_t>(hd));
    CHECK(st.assembly_mults == 3ull * n * n * static_cast<std::size_t>(hd));
}

TEST_CASE("unmerged attention with identity map is full attention") {
    std::mt19937_64 rng(61);
    std::size_t n = 9;
    int heads = 2, hd = 6;
    AttentionWeights w = make_attention_weights(heads * hd, heads, 77);
    TokenMatrix e = random_tokens(rng, n, static_cast<std::size_t>(heads * hd));
    RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
    UniqueSequence seq{e, MergeMap::identity(n)};
    UniqueSequence got = vtu_attention(seq, w, angles);
    TokenMatrix want = oracle::full_rope_attention(e, angles, w);
    CHECK(rel_frob_error(got.e_un, want) <= 1e-12);
}

TEST_CASE("unmerged attention equals group averaged full attention") {
    std::mt19937_64 rng(67);
    for (int it = 0; it < 8; ++it) {
        std::size_t n = 3 + static_cast<std::size_t>(rng() % 24);
        std::size_t nu = 1 + static_cast<std::size_t>(rng() % n);
        int heads = (it % 2 == 0) ? 1 : 4;
        int hd = 4;
        AttentionWeights w = make_attention_weights(heads * hd, heads, rng());
        RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
        UniqueSequence seq = random_unique_sequence(rng, n, nu, static_cast<std::size_t>(heads * hd));
        UniqueSequence got = vtu_attention(seq, w, angles);
        TokenMatrix want = oracle::reference_vtu(seq, w, angles);
        CHECK(rel_frob_error(got.e_un, want) <= 1e-8);

        AttentionMask mask = AttentionMask::causal(n);
        UniqueSequence gotm = vtu_attention(seq, w, angles, &mask);
        TokenMatrix wantm = oracle::reference_vtu(seq, w, angles, &mask);
        CHECK(rel_frob_error(gotm.e_un, wantm) <= 1e-8);
    }
}

TEST_CASE("attention multiplication counters are exact") {
    std::mt19937_64 rng(71);
    std::size_t n = 21, nu = 8;
    int heads = 4, hd = 8;
    AttentionWeights w = make_attention_weights(heads * hd, heads, 5);
    RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
    UniqueSequence seq = random_unique_sequence(rng, n, nu, static_cast<std::size_t>(heads * hd));
    SimilarityStats st;
    vtu_attention(seq, w, angles, nullptr, &st);
    const std::uint64_t d = static_cast<std::uint64_t>(heads) * hd;
    CHECK(st.gram_mults == 2ull * nu * nu * d);
    CHECK(st.assembly_mults == 3ull * n * n * d);
    CHECK(st.attn_mults ==
          static_cast<std::uint64_t>(heads) * (2ull * n * n + nu * n) + nu * nu * d);

    // the gram stage is exactly the cost the reduced-flops model charges
    FlopsReport fr = flops_model(n, nu, heads, hd);
    CHECK(static_cast<double>(st.gram_mults) == fr.vtu_mflops * 1e6);
}

TEST_CASE("pointwise lifting acts on unique rows") {
    std::mt19937_64 rng(73);
    UniqueSequence seq = random_unique_sequence(rng, 11, 4, 6);
    UniqueSequence doubled = lift_pointwise(
        [](const TokenMatrix& m) {
            TokenMatrix out = m;
            for (double& v : out.data) v *= 2.0;
            return out;
        },
        seq);
    TokenMatrix via_full = expand(seq.map, seq.e_un);
    for (double& v : via_full.data) v *= 2.0;
    CHECK(max_abs_diff(remerge_average(seq.map, via_full), doubled.e_un) <= 1e-12);

    CHECK_THROWS_AS(lift_pointwise([](const TokenMatrix&) { return TokenMatrix(2, 2); }, seq),
                    ShapeError);
}

TEST_CASE("lifted layer norm and mlp match the expanded route") {
    std::mt19937_64 rng(79);
    DecoderLayerWeights w = make_decoder_weights(8, 2, 16, 13);
    UniqueSequence seq = random_unique_sequence(rng, 13, 5, 8);

    TokenMatrix ln_lift = layer_norm(seq.e_un, w.ln1);
    TokenMatrix ln_full = remerge_average(seq.map, layer_norm(expand(seq.map, seq.e_un), w.ln1));
    CHECK(rel_frob_error(ln_lift, ln_full) <= 1e-12);

    TokenMatrix mlp_lift = mlp_forward(seq.e_un, w.mlp);
    TokenMatrix mlp_full = remerge_average(seq.map, mlp_forward(expand(seq.map, seq.e_un), w.mlp));
    CHECK(rel_frob_error(mlp_lift, mlp_full) <= 1e-12);
}

TEST_CASE("decoder layer matches the attention-averaged full path") {
    std::mt19937_64 rng(83);
    int heads = 2, hd = 4, dim = heads * hd;
    DecoderLayerWeights w = make_decoder_weights(dim, heads, 2 * dim, 21);
    std::size_t n = 10, nu = 4;
    UniqueSequence seq = random_unique_sequence(rng, n, nu, static_cast<std::size_t>(dim));
    RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
    AttentionMask mask = AttentionMask::causal(n);

    UniqueSequence got = decoder_layer_vtu(seq, w, angles, &mask);

    TokenMatrix a_ref =
        oracle::reference_vtu({layer_norm(seq.e_un, w.ln1), seq.map}, w.attn, angles, &mask);
    TokenMatrix x2 = seq.e_un;
    for (std::size_t i = 0; i < x2.data.size(); ++i) x2.data[i] += a_ref.data[i];
    TokenMatrix ref = x2;
    TokenMatrix m = mlp_forward(layer_norm(x2, w.ln2), w.mlp);
    for (std::size_t i = 0; i < ref.data.size(); ++i) ref.data[i] += m.data[i];

    CHECK(rel_frob_error(got.e_un, ref) <= 1e-8);
}

TEST_CASE("stacked layers on merged input stay finite") {
    // after the first layer the compressed and full paths genuinely diverge;
    // the gap is informational, not a contract
    std::mt19937_64 rng(89);
    int heads = 2, hd = 4, dim = heads * hd;
    DecoderLayerWeights w1 = make_decoder_weights(dim, heads, 2 * dim, 31);
    DecoderLayerWeights w2 = make_decoder_weights(dim, heads, 2 * dim, 32);
    std::size_t n = 12, nu = 5;
    UniqueSequence seq = random_unique_sequence(rng, n, nu, static_cast<std::size_t>(dim));
    RopeAngles angles = make_rope_angles({hd, 10000.0}, n);

    UniqueSequence two = decoder_layer_vtu(decoder_layer_vtu(seq, w1, angles), w2, angles);
    CHECK(all_finite(two.e_un));

    auto full_layer = [&](const TokenMatrix& x, const DecoderLayerWeights& w) {
        TokenMatrix a = oracle::full_rope_attention(layer_norm(x, w.ln1), angles, w.attn);
        TokenMatrix x2 = x;
        for (std::size_t i = 0; i < x2.data.size(); ++i) x2.data[i] += a.data[i];
        TokenMatrix m = mlp_forward(layer_norm(x2, w.ln2), w.mlp);
        for (std::size_t i = 0; i < x2.data.size(); ++i) x2.data[i] += m.data[i];
        return x2;
    };
    TokenMatrix full = full_layer(full_layer(expand(seq.map, seq.e_un), w1), w2);
    double gap = rel_frob_error(two.e_un, remerge_average(seq.map, full));
    CHECK(std::isfinite(gap));
    MESSAGE("two-layer compressed vs full relative gap: ", gap);
}

TEST_CASE("flops table reproduces the reduced cost figures") {
    FlopsReport r1 = flops_model(576, 89, 32, 128);
    CHECK(r1.d_total == 4096);
    CHECK(r1.full_mflops == doctest::Approx(1358.954496).epsilon(1e-12));
    CHECK(r1.vtu_mflops == doctest::Approx(64.888832).epsilon(1e-12));
    CHECK(format_mflops(r1.full_mflops) == "1359.0");
    CHECK(format_mflops(r1.vtu_mflops) == "64.9");
    CHECK(format_mflops(flops_model(576, 195, 32, 128).vtu_mflops) == "311.5");
    CHECK(format_mflops(flops_model(576, 394, 32, 128).vtu_mflops) == "1272.0");

    CHECK(FlopsReport::csv_header() == "n_full,n_unique,d_total,full_mflops,vtu_mflops");
    CHECK(r1.csv_line() == "576,89,4096,1359.0,64.9");

    // no merging: the reconstruction pays exactly twice the plain gram
    FlopsReport same = flops_model(64, 64, 4, 16);
    CHECK(same.vtu_mflops == doctest::Approx(2.0 * same.full_mflops).epsilon(1e-15));
}

TEST_CASE("mflops formatting keeps four significant digits") {
    CHECK(format_mflops(0.0) == "0.0");
    CHECK(format_mflops(64.888832) == "64.9");
    CHECK(format_mflops(311.5008) == "311.5");
    CHECK(format_mflops(1271.693312) == "1272.0");
    CHECK(format_mflops(1358.954496) == "1359.0");
    CHECK(format_mflops(12345.6) == "12350.0");
    CHECK(format_mflops(0.123456) == "0.1");
}
