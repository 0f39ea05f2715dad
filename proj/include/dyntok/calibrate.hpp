#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dyntok/profile.hpp"
#include "dyntok/vit.hpp"

namespace dyntok {

class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual std::size_t size() const = 0;
    virtual Image load(std::size_t idx) const = 0;
};

class MemoryImageSource : public ImageSource {
public:
    explicit MemoryImageSource(std::vector<Image> images)
        : images_(std::move(images)) {}
    std::size_t size() const override { return images_.size(); }
    Image load(std::size_t idx) const override { return images_.at(idx); }

private:
    std::vector<Image> images_;
};

struct CalibrationOptions {
    int batch_size = 1;
    int num_batches = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string corpus_id;
};

struct CalibrationResult {
    ThresholdProfile profile;
    std::vector<int> targets;                        // r_i per layer
    std::vector<std::vector<double>> batch_taus;     // [batch][layer]
    std::vector<std::vector<std::size_t>> batch_merged; // [batch][layer], edge totals
    std::vector<std::size_t> final_counts;           // per image, batch order
    double mean_final_tokens = 0.0;
};

// Batched threshold search: images advance through the encoder in lockstep;
// at each layer the pooled candidate scores across the batch give the
// threshold as the (batch_size * r_i)-th largest, every image then merges its
// own edges at or above it. Per-layer thresholds are averaged over batches.
CalibrationResult calibrate(const ViTWeights& encoder, const ImageSource& corpus,
                            const MergeSchedule& schedule,
                            const CalibrationOptions& opt);

} // namespace dyntok
