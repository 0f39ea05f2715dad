#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "dyntok/stats.hpp"
#include "dyntok/synth.hpp"

using namespace dyntok;

namespace fs = std::filesystem;

static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

TEST_CASE("synthetic images are deterministic") {
    auto a = synth_image(16, 16, 3, 0.1, 42);
    auto b = synth_image(16, 16, 3, 0.1, 42);
    CHECK(a == b);
    auto c = synth_image(16, 16, 3, 0.1, 43);
    CHECK(a != c);
    CHECK(a.size() == 256);
    CHECK_THROWS_AS(synth_image(0, 16, 0, 0.0, 1), ShapeError);
}

TEST_CASE("zero rectangles and zero noise give a constant image") {
    auto bytes = synth_image(8, 8, 0, 0.0, 7);
    for (std::uint8_t v : bytes)
        CHECK(v == bytes[0]);
    CHECK(bytes[0] >= 30);
    CHECK(bytes[0] <= 225);
}

TEST_CASE("bytes convert to unit range pixels") {
    Image img = bytes_to_image({0, 128, 255, 51}, 2, 2);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[2] == 1.0);
    CHECK(img.pixels[3] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(bytes_to_image({1, 2, 3}, 2, 2), ShapeError);
}

TEST_CASE("seed mixing separates nearby seeds") {
    CHECK(mix_seed(1) != mix_seed(2));
    CHECK(mix_seed(0) != 0);
}

TEST_CASE("compressed size tracks content complexity") {
    auto flat = synth_image(32, 32, 0, 0.0, 5);
    auto rects = synth_image(32, 32, 16, 0.0, 5);
    auto noise = synth_image(32, 32, 0, 0.4, 5);
    double cf = complexity_score(flat, 32, 32);
    double cr = complexity_score(rects, 32, 32);
    double cn = complexity_score(noise, 32, 32);
    CHECK(cf < cr);
    CHECK(cr < cn);
    CHECK(cf == complexity_score(flat, 32, 32)); // deterministic
    CHECK_THROWS_AS(complexity_score({}, 0, 0), ShapeError);
    CHECK_THROWS_AS(complexity_score(flat, 8, 8), ShapeError);
}

TEST_CASE("corpus generation and manifest round trip") {
    fs::path dir = fs::temp_directory_path() / "dyntok_synth_a";
    fs::path dir2 = fs::temp_directory_path() / "dyntok_synth_b";
    fs::remove_all(dir);
    fs::remove_all(dir2);

    SynthSpec spec;
    spec.h = 16;
    spec.w = 16;
    spec.patch = 4;
    spec.count = 4;
    spec.rects = {0, 4};
    spec.sigma = 0.0;
    spec.seed = 99;

    Manifest m = generate_corpus(spec, dir.string());
    REQUIRE(m.images.size() == 4);
    CHECK(m.images[0].r == 0);
    CHECK(m.images[1].r == 4);
    CHECK(m.images[2].r == 0);
    CHECK(m.images[0].path == "img_00000.raw");
    CHECK(m.images[0].seed == mix_seed(99));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "img_00003.raw"));

    Manifest loaded = load_manifest((dir / "manifest.json").string());
    REQUIRE(loaded.images.size() == 4);
    CHECK(loaded.images[1].r == 4);
    CHECK(loaded.images[1].seed == m.images[1].seed);
    CHECK(loaded.images[1].h == 16);

    // a second run reproduces every byte
    generate_corpus(spec, dir2.string());
    for (int i = 0; i < 4; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.raw", i);
        CHECK(slurp(dir / name) == slurp(dir2 / name));
    }
    CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));

    FileImageSource src((dir / "manifest.json").string());
    CHECK(src.size() == 4);
    Image img = src.load(0);
    CHECK(img.h == 16);
    CHECK(img.pixels.size() == 256);
    auto bytes = src.load_bytes(1);
    CHECK(bytes == synth_image(16, 16, 4, 0.0, m.images[1].seed));

    CHECK_THROWS_AS(FileImageSource((dir / "nope.json").string()), IoError);
    fs::remove(dir / "img_00002.raw");
    CHECK_THROWS_AS(src.load(2), IoError);

    fs::remove_all(dir);
    fs::remove_all(dir2);

    SynthSpec bad = spec;
    bad.h = 15;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.rects = {};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("rank correlation") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3, 4}, {10, 40, 20, 30}) ==
          doctest::Approx(spearman({10, 40, 20, 30}, {1, 2, 3, 4})));
    CHECK(spearman({1, 1, 2}, {1, 2, 3}) ==
          doctest::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(spearman({5, 5, 5}, {1, 2, 3}) == 0.0);
    CHECK_THROWS(spearman({}, {}));
    CHECK_THROWS(spearman({1, 2}, {1, 2, 3}));
}

TEST_CASE("mean and deviation") {
    MeanStd ms = mean_std({1, 2, 3});
    CHECK(ms.mean == doctest::Approx(2.0));
    CHECK(ms.std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    MeanStd one = mean_std({4});
    CHECK(one.mean == 4.0);
    CHECK(one.std == 0.0);
}

TEST_CASE("six digit float formatting") {
    CHECK(fmt_sig6(2.5) == "2.5");
    CHECK(fmt_sig6(0.123456789) == "0.123457");
    CHECK(fmt_sig6(1e6) == "1e+06");
}
