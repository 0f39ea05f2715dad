#include "dyntok/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <zlib.h>

#include "json.hpp"

namespace dyntok {

void SynthSpec::validate() const {
    if (h == 0 || w == 0)
        throw ConfigError("SynthSpec: image size must be positive");
    if (patch < 1 || h % static_cast<std::size_t>(patch) != 0 ||
        w % static_cast<std::size_t>(patch) != 0)
        throw ConfigError("SynthSpec: size must be divisible by patch");
    if (rects.empty())
        throw ConfigError("SynthSpec: rects list must not be empty");
    for (int r : rects)
        if (r < 0)
            throw ConfigError("SynthSpec: rects must be >= 0");
    if (sigma < 0.0)
        throw ConfigError("SynthSpec: sigma must be >= 0");
}

std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e9b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<std::uint8_t> synth_image(std::size_t h, std::size_t w, int rects,
                                      double sigma, std::uint64_t seed) {
    if (h == 0 || w == 0)
        throw ShapeError("synth_image: empty image");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> level(30, 225);
    std::vector<double> img(h * w, static_cast<double>(level(rng)));

    std::uniform_int_distribution<std::size_t> px(0, w - 1);
    std::uniform_int_distribution<std::size_t> py(0, h - 1);
    std::uniform_int_distribution<std::size_t> rw(2, std::max<std::size_t>(2, w / 2));
    std::uniform_int_distribution<std::size_t> rh(2, std::max<std::size_t>(2, h / 2));
    std::uniform_int_distribution<int> rlevel(0, 255);
    for (int r = 0; r < rects; ++r) {
        const std::size_t x0 = px(rng);
        const std::size_t y0 = py(rng);
        const std::size_t ww = rw(rng);
        const std::size_t hh = rh(rng);
        const double v = static_cast<double>(rlevel(rng));
        for (std::size_t y = y0; y < std::min(h, y0 + hh); ++y)
            for (std::size_t x = x0; x < std::min(w, x0 + ww); ++x)
                img[y * w + x] = v;
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma * 255.0);
        for (double& v : img)
            v += noise(rng);
    }
    std::vector<std::uint8_t> out(h * w);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = std::round(img[i]);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

Image bytes_to_image(const std::vector<std::uint8_t>& bytes, std::size_t h,
                     std::size_t w) {
    if (bytes.size() != h * w)
        throw ShapeError("bytes_to_image: byte count does not match size");
    Image img;
    img.h = h;
    img.w = w;
    img.pixels.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.pixels[i] = static_cast<double>(bytes[i]) / 255.0;
    return img;
}

namespace {

std::string entry_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%05zu.raw", i);
    return buf;
}

} // namespace

Manifest generate_corpus(const SynthSpec& spec, const std::string& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create directory: " + out_dir);

    Manifest m;
    for (std::size_t i = 0; i < spec.count; ++i) {
        ManifestEntry e;
        e.path = entry_name(i);
        e.h = spec.h;
        e.w = spec.w;
        e.r = spec.rects[i % spec.rects.size()];
        e.seed = mix_seed(spec.seed + i);
        const std::vector<std::uint8_t> bytes =
            synth_image(e.h, e.w, e.r, spec.sigma, e.seed);
        const std::string path = out_dir + "/" + e.path;
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw IoError("cannot open for writing: " + path);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f)
            throw IoError("write failed: " + path);
        m.images.push_back(std::move(e));
    }
    save_manifest(m, out_dir + "/manifest.json");
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    nlohmann::ordered_json j;
    j["images"] = nlohmann::ordered_json::array();
    for (const auto& e : m.images) {
        nlohmann::ordered_json je;
        je["path"] = e.path;
        je["h"] = e.h;
        je["w"] = e.w;
        je["r"] = e.r;
        je["seed"] = e.seed;
        j["images"].push_back(std::move(je));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    const std::string text = j.dump(2) + "\n";
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw IoError("write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("manifest: invalid JSON: ") + e.what());
    }
    Manifest m;
    try {
        for (const auto& je : j.at("images")) {
            ManifestEntry e;
            e.path = je.at("path").get<std::string>();
            e.h = je.at("h").get<std::size_t>();
            e.w = je.at("w").get<std::size_t>();
            e.r = je.at("r").get<int>();
            e.seed = je.at("seed").get<std::uint64_t>();
            m.images.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("manifest: bad field: ") + e.what());
    }
    return m;
}

double complexity_score(const std::vector<std::uint8_t>& bytes, std::size_t h,
                        std::size_t w) {
    if (bytes.empty() || h * w != bytes.size())
        throw ShapeError("complexity_score: byte count does not match size");
    uLongf bound = compressBound(static_cast<uLong>(bytes.size()));
    std::vector<std::uint8_t> buf(bound);
    const int rc = compress2(buf.data(), &bound, bytes.data(),
                             static_cast<uLong>(bytes.size()), 9);
    if (rc != Z_OK)
        throw IoError("complexity_score: compression failed");
    return static_cast<double>(bound) / static_cast<double>(h * w);
}

FileImageSource::FileImageSource(const std::string& manifest_path)
    : manifest_(load_manifest(manifest_path)) {
    const std::filesystem::path p(manifest_path);
    base_dir_ = p.has_parent_path() ? p.parent_path().string() : ".";
}

std::vector<std::uint8_t> FileImageSource::load_bytes(std::size_t idx) const {
    const ManifestEntry& e = manifest_.images.at(idx);
    const std::string path = base_dir_ + "/" + e.path;
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes(e.h * e.w);
    f.read(reinterpret_cast<char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
    if (f.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError("short read: " + path);
    return bytes;
}

Image FileImageSource::load(std::size_t idx) const {
    const ManifestEntry& e = manifest_.images.at(idx);
    return bytes_to_image(load_bytes(idx), e.h, e.w);
}

} // namespace dyntok
