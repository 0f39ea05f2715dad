#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dyntok/synth.hpp"

namespace dyntok {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;   // verification or calibration failure
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

struct SynthArgs {
    SynthSpec spec;
    std::string out_dir;
};
int run_synth(const SynthArgs& a, std::ostream& out);

struct CalibrateArgs {
    std::string manifest_path;
    std::string config_path;
    std::string out_profile;
    std::string schedule = "constant";
    int r_bar = 0;
    int batch_size = 1;
    int num_batches = 1;
    std::uint64_t seed = 0;
    int threads = 1;
};
int run_calibrate(const CalibrateArgs& a, std::ostream& out);

struct EncodeArgs {
    std::string manifest_path;
    std::string config_path;
    std::string out_csv;
    std::string profile_path; // dynamic mode when set
    int topr = -1;            // fixed mode when >= 0
    bool off = false;
    std::string dump_tokens_dir; // optional per-image token CSVs
    int threads = 1;
};
int run_encode(const EncodeArgs& a, std::ostream& out);

struct VerifyArgs {
    std::uint64_t seed = 20240801;
    std::vector<std::size_t> sizes = {12, 33, 64};
    double perturb = 0.0; // test hook: offsets one computed entry
};
int run_verify(const VerifyArgs& a, std::ostream& out);

struct BenchArgs {
    std::size_t n = 576;
    std::vector<std::size_t> n_un = {89, 195, 394};
    int heads = 32;
    int head_dim = 128;
    int reps = 2;
    std::uint64_t seed = 1;
};
int run_bench(const BenchArgs& a, std::ostream& out);

// Full argv-level entry point used by the binary and by tests.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

} // namespace dyntok
