#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dyntok/calibrate.hpp"
#include "dyntok/vit.hpp"

namespace dyntok {

// Synthetic grayscale corpus: random constant background plus R random
// constant rectangles, optional gaussian pixel noise. R is the redundancy
// knob: more rectangles means less compressible, less mergeable content.
struct SynthSpec {
    std::size_t h = 32;
    std::size_t w = 32;
    int patch = 4;
    std::size_t count = 0;
    std::vector<int> rects = {0}; // cycled round-robin over images
    double sigma = 0.0;           // noise stddev in [0,1] pixel units
    std::uint64_t seed = 0;

    void validate() const;
};

struct ManifestEntry {
    std::string path;
    std::size_t h = 0;
    std::size_t w = 0;
    int r = 0;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::vector<ManifestEntry> images;
};

std::uint64_t mix_seed(std::uint64_t z);

std::vector<std::uint8_t> synth_image(std::size_t h, std::size_t w, int rects,
                                      double sigma, std::uint64_t seed);

Image bytes_to_image(const std::vector<std::uint8_t>& bytes, std::size_t h,
                     std::size_t w);

// Writes img_%05d.raw files plus manifest.json into out_dir.
Manifest generate_corpus(const SynthSpec& spec, const std::string& out_dir);

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

// Deterministic lossless compressed size per pixel.
double complexity_score(const std::vector<std::uint8_t>& bytes, std::size_t h,
                        std::size_t w);

// Image source backed by a manifest; raw paths resolve relative to the
// manifest's directory.
class FileImageSource : public ImageSource {
public:
    explicit FileImageSource(const std::string& manifest_path);
    std::size_t size() const override { return manifest_.images.size(); }
    Image load(std::size_t idx) const override;

    const Manifest& manifest() const { return manifest_; }
    std::vector<std::uint8_t> load_bytes(std::size_t idx) const;

private:
    Manifest manifest_;
    std::string base_dir_;
};

} // namespace dyntok
