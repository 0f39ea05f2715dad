#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dyntok/dtome.hpp"
#include "dyntok/merge_map.hpp"
#include "dyntok/nn.hpp"
#include "dyntok/profile.hpp"
#include "dyntok/token_matrix.hpp"

namespace dyntok {

// Single-channel image with values in [0, 1], row-major.
struct Image {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<double> pixels;
};

struct ViTConfig {
    int layers = 0;
    int dim = 0;
    int heads = 0;
    int patch = 0;
    int grid_rows = 0;
    int grid_cols = 0;
    bool cls = true;
    int mlp_hidden = 0; // 0 means 4*dim

    int hidden() const { return mlp_hidden > 0 ? mlp_hidden : 4 * dim; }
    std::size_t n_tokens() const {
        return static_cast<std::size_t>(grid_rows) * static_cast<std::size_t>(grid_cols) +
               (cls ? 1u : 0u);
    }
    void validate() const;
};

struct ViTBlockWeights {
    LayerNormParams ln1;
    AttentionWeights attn;
    LayerNormParams ln2;
    MlpWeights mlp;
};

struct ViTWeights {
    ViTConfig cfg;
    std::uint64_t seed = 0;
    TokenMatrix patch_proj;          // patch*patch x dim
    std::vector<double> patch_bias;  // dim
    std::vector<double> cls_token;   // dim (empty when cls disabled)
    TokenMatrix pos_emb;             // n_tokens x dim
    std::vector<ViTBlockWeights> blocks;
};

ViTWeights make_vit_weights(const ViTConfig& cfg, std::uint64_t seed);

void save_weights(const ViTWeights& w, const std::string& path);
ViTWeights load_weights(const std::string& path);

// Config JSON: {"layers":..,"dim":..,"heads":..,"patch":..,"grid_rows":..,
// "grid_cols":..,"cls":..,"mlp_hidden":..,"seed":..}
struct EncoderSpec {
    ViTConfig cfg;
    std::uint64_t seed = 0;
};
EncoderSpec encoder_spec_from_json_text(const std::string& text);
std::string encoder_spec_to_json_text(const EncoderSpec& spec);
EncoderSpec load_encoder_spec(const std::string& path);

// Flatten non-overlapping patches, project to model dim, prepend the class
// token if configured, add learned position embeddings.
TokenMatrix patchify(const Image& img, const ViTWeights& w);

enum class MergeMode { off, fixed_topr, dynamic };

struct MergePolicy {
    MergeMode mode = MergeMode::off;
    int topr = 0;                             // fixed_topr: merges per layer
    const ThresholdProfile* profile = nullptr; // dynamic
};

struct EncodeResult {
    TokenMatrix tokens;
    MergeMap map;
    std::vector<std::size_t> layer_counts; // token count after each block
};

EncodeResult encode(const Image& img, const ViTWeights& w, const MergePolicy& policy);

// One pre-norm attention sub-block on the current (possibly reduced) sequence.
// Returns the residual-updated tokens plus the head-mean key rows the merge
// step scores against.
struct AttentionStep {
    TokenMatrix x;
    TokenMatrix merge_keys; // n x head_dim, mean over heads (unnormalized)
};
AttentionStep vit_attention_block(const TokenMatrix& x, const SizeVector& sz,
                                  const ViTBlockWeights& bw, int heads);

TokenMatrix vit_mlp_block(const TokenMatrix& x, const ViTBlockWeights& bw);

void write_tokens_csv(const TokenMatrix& tokens, const std::string& path);

} // namespace dyntok
