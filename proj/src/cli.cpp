#include "dyntok/commands.hpp"

#include <algorithm>

#include "CLI11.hpp"

namespace dyntok {

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    CLI::App app{"token workbench: synthetic corpora, merge-threshold "
                 "calibration, variable-length encoding, oracle checks, "
                 "attention cost benchmarks"};
    app.require_subcommand(1);

    SynthArgs synth;
    std::vector<int> rects = {0};
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic image corpus");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--height", synth.spec.h, "image height");
    synth_cmd->add_option("--width", synth.spec.w, "image width");
    synth_cmd->add_option("--patch", synth.spec.patch, "patch size (divisibility check)");
    synth_cmd->add_option("--count", synth.spec.count, "number of images")->required();
    synth_cmd->add_option("--rects", rects, "rectangle counts, cycled over images");
    synth_cmd->add_option("--sigma", synth.spec.sigma, "pixel noise stddev in [0,1] units");
    synth_cmd->add_option("--seed", synth.spec.seed, "corpus seed");

    CalibrateArgs cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "fit per-layer merge thresholds");
    cal_cmd->add_option("--manifest", cal.manifest_path, "corpus manifest JSON")->required();
    cal_cmd->add_option("--config", cal.config_path, "encoder config JSON")->required();
    cal_cmd->add_option("--out", cal.out_profile, "output profile JSON")->required();
    cal_cmd->add_option("--schedule", cal.schedule, "constant|linear|reverse_linear");
    cal_cmd->add_option("--rbar", cal.r_bar, "mean merges per layer");
    cal_cmd->add_option("--batch-size", cal.batch_size, "images per batch");
    cal_cmd->add_option("--num-batches", cal.num_batches, "number of batches");
    cal_cmd->add_option("--seed", cal.seed, "image order seed");
    cal_cmd->add_option("--threads", cal.threads, "worker threads");

    EncodeArgs enc;
    auto* enc_cmd = app.add_subcommand("encode", "encode a corpus, report token counts");
    enc_cmd->add_option("--manifest", enc.manifest_path, "corpus manifest JSON")->required();
    enc_cmd->add_option("--config", enc.config_path, "encoder config JSON")->required();
    enc_cmd->add_option("--out", enc.out_csv, "output CSV path")->required();
    enc_cmd->add_option("--profile", enc.profile_path, "threshold profile JSON (dynamic mode)");
    enc_cmd->add_option("--topr", enc.topr, "fixed merges per layer");
    enc_cmd->add_flag("--off", enc.off, "disable merging");
    enc_cmd->add_option("--dump-tokens", enc.dump_tokens_dir, "directory for per-image token CSVs");
    enc_cmd->add_option("--threads", enc.threads, "worker threads");

    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify", "run randomized oracle equivalence suites");
    ver_cmd->add_option("--seed", ver.seed, "case seed");
    ver_cmd->add_option("--sizes", ver.sizes, "sequence lengths to exercise");
    ver_cmd->add_option("--perturb", ver.perturb, "test hook: offset one computed entry");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "analytic cost table plus wall-clock timings");
    bench_cmd->add_option("--n", bench.n, "full sequence length");
    bench_cmd->add_option("--nun", bench.n_un, "unique counts to benchmark");
    bench_cmd->add_option("--heads", bench.heads, "attention heads");
    bench_cmd->add_option("--head-dim", bench.head_dim, "per-head dimension");
    bench_cmd->add_option("--reps", bench.reps, "timed repetitions");
    bench_cmd->add_option("--seed", bench.seed, "input seed");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        synth.spec.rects = rects;
        if (synth_cmd->parsed()) return run_synth(synth, out);
        if (cal_cmd->parsed()) return run_calibrate(cal, out);
        if (enc_cmd->parsed()) return run_encode(enc, out);
        if (ver_cmd->parsed()) return run_verify(ver, out);
        if (bench_cmd->parsed()) return run_bench(bench, out);
        err << "no subcommand selected\n";
        return kExitUsage;
    } catch (const CalibrationError& e) {
        err << "calibration error: " << e.what() << "\n";
        return kExitFail;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SchemaError& e) {
        err << "schema error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        err << "argument error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace dyntok
