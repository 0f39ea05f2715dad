#include "dyntok/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dyntok/calibrate.hpp"
#include "dyntok/oracle.hpp"
#include "dyntok/parallel.hpp"
#include "dyntok/sampling.hpp"
#include "dyntok/stats.hpp"
#include "dyntok/vtu.hpp"

namespace dyntok {

namespace {

std::string fmt_tau(double t) {
    if (std::isinf(t))
        return t > 0 ? "inf" : "-inf";
    return fmt_sig6(t);
}

} // namespace

int run_synth(const SynthArgs& a, std::ostream& out) {
    const Manifest m = generate_corpus(a.spec, a.out_dir);
    out << "wrote " << m.images.size() << " images to " << a.out_dir << "\n";
    out << "manifest: " << a.out_dir << "/manifest.json\n";
    return kExitOk;
}

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
    const EncoderSpec spec = load_encoder_spec(a.config_path);
    const ViTWeights weights = make_vit_weights(spec.cfg, spec.seed);
    const FileImageSource corpus(a.manifest_path);

    MergeSchedule schedule;
    schedule.kind = schedule_kind_from_name(a.schedule);
    schedule.r_bar = a.r_bar;

    CalibrationOptions opt;
    opt.batch_size = a.batch_size;
    opt.num_batches = a.num_batches;
    opt.seed = a.seed;
    opt.threads = a.threads;
    opt.corpus_id = std::filesystem::path(a.manifest_path).filename().string();

    const CalibrationResult res = calibrate(weights, corpus, schedule, opt);
    for (std::size_t i = 0; i < res.profile.taus.size(); ++i) {
        double merged = 0.0;
        for (const auto& bm : res.batch_merged)
            merged += static_cast<double>(bm[i]);
        merged /= static_cast<double>(res.batch_merged.size() * static_cast<std::size_t>(a.batch_size));
        out << "layer " << i << ": tau=" << fmt_tau(res.profile.taus[i])
            << " target=" << res.targets[i]
            << " merged_mean=" << fmt_sig6(merged) << "\n";
    }
    out << "mean final tokens: " << fmt_sig6(res.mean_final_tokens) << "\n";
    save_profile(res.profile, a.out_profile);
    out << "profile written: " << a.out_profile << "\n";
    return kExitOk;
}

int run_encode(const EncodeArgs& a, std::ostream& out) {
    const int modes = (a.off ? 1 : 0) + (a.topr >= 0 ? 1 : 0) +
                      (a.profile_path.empty() ? 0 : 1);
    if (modes != 1)
        throw ConfigError("encode: choose exactly one of --off, --topr, --profile");

    const EncoderSpec spec = load_encoder_spec(a.config_path);
    const ViTWeights weights = make_vit_weights(spec.cfg, spec.seed);
    const FileImageSource corpus(a.manifest_path);

    ThresholdProfile profile;
    MergePolicy policy;
    if (a.off) {
        policy.mode = MergeMode::off;
    } else if (a.topr >= 0) {
        policy.mode = MergeMode::fixed_topr;
        policy.topr = a.topr;
    } else {
        profile = load_profile(a.profile_path);
        policy.mode = MergeMode::dynamic;
        policy.profile = &profile;
    }

    const std::size_t count = corpus.size();
    if (count == 0)
        throw ConfigError("encode: empty manifest");

    struct Row {
        std::string id;
        double complexity = 0.0;
        std::size_t tokens = 0;
        std::string layer_counts;
    };
    std::vector<Row> rows(count);
    parallel_for(count, a.threads, [&](std::size_t i) {
        const ManifestEntry& e = corpus.manifest().images[i];
        const std::vector<std::uint8_t> bytes = corpus.load_bytes(i);
        const Image img = bytes_to_image(bytes, e.h, e.w);
        const EncodeResult res = encode(img, weights, policy);
        Row& r = rows[i];
        r.id = e.path;
        r.complexity = complexity_score(bytes, e.h, e.w);
        r.tokens = res.tokens.rows;
        std::ostringstream lc;
        for (std::size_t l = 0; l < res.layer_counts.size(); ++l) {
            if (l) lc << ';';
            lc << res.layer_counts[l];
        }
        r.layer_counts = lc.str();
        if (!a.dump_tokens_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(a.dump_tokens_dir, ec);
            write_tokens_csv(res.tokens, a.dump_tokens_dir + "/" + e.path + ".tokens.csv");
        }
    });

    std::ofstream csv(a.out_csv, std::ios::binary);
    if (!csv)
        throw IoError("cannot open for writing: " + a.out_csv);
    csv << "image_id,complexity_score,token_count,per_layer_counts\n";
    for (const Row& r : rows)
        csv << r.id << ',' << fmt_sig6(r.complexity) << ',' << r.tokens << ','
            << r.layer_counts << '\n';
    if (!csv)
        throw IoError("write failed: " + a.out_csv);

    std::vector<double> complexities(count), tokens(count);
    for (std::size_t i = 0; i < count; ++i) {
        complexities[i] = rows[i].complexity;
        tokens[i] = static_cast<double>(rows[i].tokens);
    }
    const MeanStd ms = mean_std(tokens);
    out << "images: " << count << "\n";
    out << "tokens: " << fmt_sig6(ms.mean) << " +- " << fmt_sig6(ms.std)
        << " (mean +- std)\n";
    if (count >= 2)
        out << "spearman(complexity, tokens): " << fmt_sig6(spearman(complexities, tokens))
            << "\n";
    out << "csv written: " << a.out_csv << "\n";
    return kExitOk;
}

int run_verify(const VerifyArgs& a, std::ostream& out) {
    std::mt19937_64 rng(a.seed);
    char line[192];
    bool all_ok = true;

    // Unmerged-attention reconstruction against the brute-force path.
    {
        double max_rel = 0.0;
        bool first = true;
        for (std::size_t n : a.sizes) {
            for (int rep = 0; rep < 4; ++rep) {
                std::uniform_int_distribution<std::size_t> du(1, n);
                const std::size_t nu = du(rng);
                const int hd = (rep % 2 == 0) ? 4 : 8;
                const int heads = (rep < 2) ? 1 : 2;
                const int d = heads * hd;
                const UniqueSequence seq =
                    random_unique_sequence(rng, n, nu, static_cast<std::size_t>(d));
                const AttentionWeights w = make_attention_weights(d, heads, rng());
                const RopeAngles angles = make_rope_angles({hd, 10000.0}, n);
                const AttentionMask mask = AttentionMask::causal(n);
                const AttentionMask* mp = (rep % 2 == 1) ? &mask : nullptr;
                UniqueSequence got = vtu_attention(seq, w, angles, mp);
                if (first) {
                    got.e_un.data[0] += a.perturb;
                    first = false;
                }
                const TokenMatrix ref = oracle::reference_vtu(seq, w, angles, mp);
                max_rel = std::max(max_rel, rel_frob_error(got.e_un, ref));
            }
        }
        const bool ok = max_rel <= 1e-8;
        all_ok = all_ok && ok;
        std::snprintf(line, sizeof(line), "suite unmerge-attention: %s (max rel err %.1e)",
                      ok ? "pass" : "fail", max_rel);
        out << line << "\n";
    }

    // Size-weighted attention against physically duplicated keys.
    {
        double max_abs = 0.0;
        for (std::size_t n : a.sizes) {
            const std::size_t d = 8, dv = 5, m = 3;
            const TokenMatrix q = random_tokens(rng, m, d);
            const TokenMatrix k = random_tokens(rng, n, d);
            const TokenMatrix v = random_tokens(rng, n, dv);
            std::uniform_int_distribution<std::size_t> ds(1, 64);
            SizeVector sz(n);
            for (auto& s : sz)
                s = ds(rng);
            const double scale = 1.0 / std::sqrt(static_cast<double>(d));
            const TokenMatrix got = size_weighted_attention(q, k, v, sz, scale);
            for (std::size_t i = 0; i < m; ++i) {
                std::vector<double> qrow(q.row(i), q.row(i) + d);
                const std::vector<double> ref =
                    oracle::duplicated_attention(qrow, k, v, sz, scale);
                for (std::size_t c = 0; c < dv; ++c)
                    max_abs = std::max(max_abs, std::fabs(got.at(i, c) - ref[c]));
            }
        }
        const bool ok = max_abs <= 1e-10;
        all_ok = all_ok && ok;
        std::snprintf(line, sizeof(line), "suite size-weights: %s (max abs err %.1e)",
                      ok ? "pass" : "fail", max_abs);
        out << line << "\n";
    }

    // Threshold selection against the full-sort oracle.
    {
        bool ok = true;
        std::uniform_int_distribution<std::size_t> dl(0, 40);
        std::normal_distribution<double> dv(0.0, 1.0);
        for (int c = 0; c < 200 && ok; ++c) {
            std::vector<double> scores(dl(rng));
            for (double& s : scores)
                s = dv(rng);
            for (std::size_t k = 0; k <= scores.size() + 2 && ok; ++k)
                ok = calibrate_layer(scores, k) == oracle::reference_threshold(scores, k);
        }
        all_ok = all_ok && ok;
        out << "suite threshold-order-stat: " << (ok ? "pass" : "fail") << "\n";
    }

    // Cost table strings.
    {
        const std::size_t nus[3] = {89, 195, 394};
        const char* expected[3] = {"64.9", "311.5", "1272.0"};
        bool ok = format_mflops(flops_model(576, 576, 32, 128).full_mflops) == "1359.0";
        for (int i = 0; i < 3; ++i)
            ok = ok && format_mflops(flops_model(576, nus[i], 32, 128).vtu_mflops) == expected[i];
        const FlopsReport eq = flops_model(200, 200, 4, 16);
        ok = ok && eq.vtu_mflops == 2.0 * eq.full_mflops;
        all_ok = all_ok && ok;
        out << "suite cost-table: " << (ok ? "pass" : "fail") << "\n";
    }

    out << "verify: " << (all_ok ? "PASS" : "FAIL") << "\n";
    return all_ok ? kExitOk : kExitFail;
}

int run_bench(const BenchArgs& a, std::ostream& out) {
    out << FlopsReport::csv_header()
        << ",full_ms_mean,full_ms_std,vtu_ms_mean,vtu_ms_std\n";
    for (std::size_t nu : a.n_un) {
        if (nu > a.n)
            throw ConfigError("bench: n_un must be <= n");
        const FlopsReport rep = flops_model(a.n, nu, a.heads, a.head_dim);
        std::mt19937_64 rng(mix_seed(a.seed + nu));
        const int d = a.heads * a.head_dim;
        const UniqueSequence seq =
            random_unique_sequence(rng, a.n, nu, static_cast<std::size_t>(d));
        const AttentionWeights w = make_attention_weights(d, a.heads, rng());
        const RopeAngles angles = make_rope_angles({a.head_dim, 10000.0}, a.n);
        const TokenMatrix e_full = expand(seq.map, seq.e_un);

        std::vector<double> vtu_ms, full_ms;
        for (int r = 0; r < a.reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const UniqueSequence got = vtu_attention(seq, w, angles);
            const auto t1 = std::chrono::steady_clock::now();
            (void)got;
            vtu_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

            const auto t2 = std::chrono::steady_clock::now();
            const TokenMatrix ref = oracle::full_rope_attention(e_full, angles, w);
            const auto t3 = std::chrono::steady_clock::now();
            (void)ref;
            full_ms.push_back(std::chrono::duration<double, std::milli>(t3 - t2).count());
        }
        const MeanStd mv = mean_std(vtu_ms);
        const MeanStd mf = mean_std(full_ms);
        out << rep.csv_line() << ',' << fmt_sig6(mf.mean) << ',' << fmt_sig6(mf.std)
            << ',' << fmt_sig6(mv.mean) << ',' << fmt_sig6(mv.std) << "\n";
    }
    return kExitOk;
}

} // namespace dyntok
