#include "dyntok/vit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"

namespace dyntok {

void ViTConfig::validate() const {
    if (layers < 1) throw ConfigError("ViTConfig: layers must be >= 1");
    if (dim < 1 || heads < 1 || dim % heads != 0)
        throw ConfigError("ViTConfig: dim must be a positive multiple of heads");
    if (patch < 1) throw ConfigError("ViTConfig: patch must be >= 1");
    if (grid_rows < 1 || grid_cols < 1)
        throw ConfigError("ViTConfig: grid must be positive");
    if (mlp_hidden < 0) throw ConfigError("ViTConfig: mlp_hidden must be >= 0");
}

namespace {

void fill_normal(std::mt19937_64& rng, std::vector<double>& v, double scale) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& x : v)
        x = dist(rng) * scale;
}

TokenMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                          double scale) {
    TokenMatrix m(r, c);
    fill_normal(rng, m.data, scale);
    return m;
}

} // namespace

ViTWeights make_vit_weights(const ViTConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const auto d = static_cast<std::size_t>(cfg.dim);
    const auto pp = static_cast<std::size_t>(cfg.patch) * static_cast<std::size_t>(cfg.patch);
    const auto hid = static_cast<std::size_t>(cfg.hidden());
    const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.dim));

    ViTWeights w;
    w.cfg = cfg;
    w.seed = seed;
    w.patch_proj = random_matrix(rng, pp, d, 1.0 / std::sqrt(static_cast<double>(pp)));
    w.patch_bias.assign(d, 0.0);
    if (cfg.cls) {
        w.cls_token.assign(d, 0.0);
        fill_normal(rng, w.cls_token, sd);
    }
    w.pos_emb = random_matrix(rng, cfg.n_tokens(), d, 0.02);
    w.blocks.resize(static_cast<std::size_t>(cfg.layers));
    for (auto& b : w.blocks) {
        b.ln1.gamma.assign(d, 1.0);
        b.ln1.beta.assign(d, 0.0);
        b.attn.heads = cfg.heads;
        b.attn.wq = random_matrix(rng, d, d, sd);
        b.attn.wk = random_matrix(rng, d, d, sd);
        b.attn.wv = random_matrix(rng, d, d, sd);
        b.attn.wo = random_matrix(rng, d, d, sd);
        b.attn.bq.assign(d, 0.0);
        b.attn.bk.assign(d, 0.0);
        b.attn.bv.assign(d, 0.0);
        b.attn.bo.assign(d, 0.0);
        b.ln2.gamma.assign(d, 1.0);
        b.ln2.beta.assign(d, 0.0);
        b.mlp.w1 = random_matrix(rng, d, hid, sd);
        b.mlp.b1.assign(hid, 0.0);
        b.mlp.w2 = random_matrix(rng, hid, d, 1.0 / std::sqrt(static_cast<double>(hid)));
        b.mlp.b2.assign(d, 0.0);
    }
    return w;
}

namespace {

nlohmann::ordered_json config_to_json(const ViTConfig& cfg, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["layers"] = cfg.layers;
    j["dim"] = cfg.dim;
    j["heads"] = cfg.heads;
    j["patch"] = cfg.patch;
    j["grid_rows"] = cfg.grid_rows;
    j["grid_cols"] = cfg.grid_cols;
    j["cls"] = cfg.cls;
    j["mlp_hidden"] = cfg.mlp_hidden;
    j["seed"] = seed;
    return j;
}

EncoderSpec config_from_json(const nlohmann::json& j) {
    EncoderSpec s;
    try {
        s.cfg.layers = j.at("layers").get<int>();
        s.cfg.dim = j.at("dim").get<int>();
        s.cfg.heads = j.at("heads").get<int>();
        s.cfg.patch = j.at("patch").get<int>();
        s.cfg.grid_rows = j.at("grid_rows").get<int>();
        s.cfg.grid_cols = j.at("grid_cols").get<int>();
        s.cfg.cls = j.value("cls", true);
        s.cfg.mlp_hidden = j.value("mlp_hidden", 0);
        s.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("encoder config: bad field: ") + e.what());
    }
    s.cfg.validate();
    return s;
}

} // namespace

std::string encoder_spec_to_json_text(const EncoderSpec& spec) {
    return config_to_json(spec.cfg, spec.seed).dump(2) + "\n";
}

EncoderSpec encoder_spec_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("encoder config: invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

EncoderSpec load_encoder_spec(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return encoder_spec_from_json_text(text);
}

namespace {

void append_all(std::vector<double>& out, const TokenMatrix& m) {
    out.insert(out.end(), m.data.begin(), m.data.end());
}

void append_all(std::vector<double>& out, const std::vector<double>& v) {
    out.insert(out.end(), v.begin(), v.end());
}

std::vector<double> flatten_weights(const ViTWeights& w) {
    std::vector<double> flat;
    append_all(flat, w.patch_proj);
    append_all(flat, w.patch_bias);
    append_all(flat, w.cls_token);
    append_all(flat, w.pos_emb);
    for (const auto& b : w.blocks) {
        append_all(flat, b.ln1.gamma);
        append_all(flat, b.ln1.beta);
        append_all(flat, b.attn.wq);
        append_all(flat, b.attn.bq);
        append_all(flat, b.attn.wk);
        append_all(flat, b.attn.bk);
        append_all(flat, b.attn.wv);
        append_all(flat, b.attn.bv);
        append_all(flat, b.attn.wo);
        append_all(flat, b.attn.bo);
        append_all(flat, b.ln2.gamma);
        append_all(flat, b.ln2.beta);
        append_all(flat, b.mlp.w1);
        append_all(flat, b.mlp.b1);
        append_all(flat, b.mlp.w2);
        append_all(flat, b.mlp.b2);
    }
    return flat;
}

class FlatReader {
public:
    FlatReader(const std::vector<double>& flat) : flat_(flat) {}

    void take(TokenMatrix& m) {
        for (double& v : m.data) v = next();
    }
    void take(std::vector<double>& v) {
        for (double& x : v) x = next();
    }
    bool exhausted() const { return pos_ == flat_.size(); }

private:
    double next() {
        if (pos_ >= flat_.size())
            throw SchemaError("weights file: not enough values");
        return flat_[pos_++];
    }
    const std::vector<double>& flat_;
    std::size_t pos_ = 0;
};

} // namespace

void save_weights(const ViTWeights& w, const std::string& path) {
    const std::vector<double> flat = flatten_weights(w);
    nlohmann::ordered_json header = config_to_json(w.cfg, w.seed);
    header["count"] = flat.size();
    const std::string htext = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    const std::uint64_t hlen = htext.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    f.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!f)
        throw IoError("write failed: " + path);
}

ViTWeights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!f || hlen > (1u << 20))
        throw SchemaError("weights file: bad header length");
    std::string htext(hlen, '\0');
    f.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!f)
        throw IoError("weights file: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("weights file: invalid header: ") + e.what());
    }
    EncoderSpec spec = config_from_json(header);
    std::uint64_t count = 0;
    try {
        count = header.at("count").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("weights file: bad count: ") + e.what());
    }

    std::vector<double> flat(count);
    f.read(reinterpret_cast<char*>(flat.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (!f)
        throw IoError("weights file: truncated data");

    // Reuse the generator for structure, then overwrite every value from disk.
    ViTWeights w = make_vit_weights(spec.cfg, spec.seed);
    FlatReader r(flat);
    r.take(w.patch_proj);
    r.take(w.patch_bias);
    r.take(w.cls_token);
    r.take(w.pos_emb);
    for (auto& b : w.blocks) {
        r.take(b.ln1.gamma);
        r.take(b.ln1.beta);
        r.take(b.attn.wq);
        r.take(b.attn.bq);
        r.take(b.attn.wk);
        r.take(b.attn.bk);
        r.take(b.attn.wv);
        r.take(b.attn.bv);
        r.take(b.attn.wo);
        r.take(b.attn.bo);
        r.take(b.ln2.gamma);
        r.take(b.ln2.beta);
        r.take(b.mlp.w1);
        r.take(b.mlp.b1);
        r.take(b.mlp.w2);
        r.take(b.mlp.b2);
    }
    if (!r.exhausted())
        throw SchemaError("weights file: trailing values");
    return w;
}

TokenMatrix patchify(const Image& img, const ViTWeights& w) {
    const ViTConfig& cfg = w.cfg;
    const auto p = static_cast<std::size_t>(cfg.patch);
    if (img.h % p != 0 || img.w % p != 0)
        throw ShapeError("patchify: image size not divisible by patch");
    if (img.h / p != static_cast<std::size_t>(cfg.grid_rows) ||
        img.w / p != static_cast<std::size_t>(cfg.grid_cols))
        throw ShapeError("patchify: image grid does not match config");
    if (img.pixels.size() != img.h * img.w)
        throw ShapeError("patchify: pixel count does not match size");

    const std::size_t n = cfg.n_tokens();
    const auto d = static_cast<std::size_t>(cfg.dim);
    TokenMatrix out(n, d);
    std::size_t row = 0;
    if (cfg.cls) {
        for (std::size_t c = 0; c < d; ++c)
            out.at(0, c) = w.cls_token[c];
        row = 1;
    }
    std::vector<double> patch(p * p);
    for (int pr = 0; pr < cfg.grid_rows; ++pr) {
        for (int pc = 0; pc < cfg.grid_cols; ++pc) {
            for (std::size_t y = 0; y < p; ++y)
                for (std::size_t x = 0; x < p; ++x)
                    patch[y * p + x] =
                        img.pixels[(static_cast<std::size_t>(pr) * p + y) * img.w +
                                   static_cast<std::size_t>(pc) * p + x];
            double* dst = out.row(row);
            for (std::size_t k = 0; k < p * p; ++k) {
                const double v = patch[k];
                const double* wk = w.patch_proj.row(k);
                for (std::size_t c = 0; c < d; ++c)
                    dst[c] += v * wk[c];
            }
            for (std::size_t c = 0; c < d; ++c)
                dst[c] += w.patch_bias[c];
            ++row;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* dst = out.row(i);
        const double* pe = w.pos_emb.row(i);
        for (std::size_t c = 0; c < d; ++c)
            dst[c] += pe[c];
    }
    return out;
}

AttentionStep vit_attention_block(const TokenMatrix& x, const SizeVector& sz,
                                  const ViTBlockWeights& bw, int heads) {
    const TokenMatrix h = layer_norm(x, bw.ln1);
    const TokenMatrix q = linear(h, bw.attn.wq, bw.attn.bq);
    const TokenMatrix k = linear(h, bw.attn.wk, bw.attn.bk);
    const TokenMatrix v = linear(h, bw.attn.wv, bw.attn.bv);
    const int hd = static_cast<int>(x.cols) / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    TokenMatrix concat(x.rows, x.cols);
    TokenMatrix merge_keys(x.rows, static_cast<std::size_t>(hd));
    for (int head = 0; head < heads; ++head) {
        const TokenMatrix qh = head_slice(q, head, hd);
        const TokenMatrix kh = head_slice(k, head, hd);
        const TokenMatrix vh = head_slice(v, head, hd);
        const TokenMatrix oh = size_weighted_attention(qh, kh, vh, sz, scale);
        const std::size_t off = static_cast<std::size_t>(head) * static_cast<std::size_t>(hd);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* src = oh.row(i);
            double* dst = concat.row(i) + off;
            for (int c = 0; c < hd; ++c)
                dst[c] = src[c];
            const double* ks = kh.row(i);
            double* km = merge_keys.row(i);
            for (int c = 0; c < hd; ++c)
                km[c] += ks[c];
        }
    }
    const double inv_heads = 1.0 / static_cast<double>(heads);
    for (double& v2 : merge_keys.data)
        v2 *= inv_heads;

    TokenMatrix attn = linear(concat, bw.attn.wo, bw.attn.bo);
    AttentionStep step;
    step.x = x;
    for (std::size_t i = 0; i < attn.data.size(); ++i)
        step.x.data[i] += attn.data[i];
    step.merge_keys = std::move(merge_keys);
    return step;
}

TokenMatrix vit_mlp_block(const TokenMatrix& x, const ViTBlockWeights& bw) {
    TokenMatrix out = x;
    const TokenMatrix m = mlp_forward(layer_norm(x, bw.ln2), bw.mlp);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += m.data[i];
    return out;
}

EncodeResult encode(const Image& img, const ViTWeights& w, const MergePolicy& policy) {
    const ViTConfig& cfg = w.cfg;
    cfg.validate();
    if (policy.mode == MergeMode::dynamic) {
        if (policy.profile == nullptr)
            throw ConfigError("encode: dynamic mode requires a threshold profile");
        if (policy.profile->taus.size() != static_cast<std::size_t>(cfg.layers))
            throw ConfigError("encode: profile layer count does not match config");
    }
    if (policy.mode == MergeMode::fixed_topr && policy.topr < 0)
        throw ConfigError("encode: topr must be >= 0");

    TokenMatrix x = patchify(img, w);
    MergeMap map = MergeMap::identity(x.rows);
    std::vector<std::size_t> counts;
    counts.reserve(static_cast<std::size_t>(cfg.layers));

    for (int layer = 0; layer < cfg.layers; ++layer) {
        const SizeVector sz = map.sizes();
        AttentionStep step = vit_attention_block(x, sz, w.blocks[static_cast<std::size_t>(layer)], cfg.heads);
        x = std::move(step.x);

        if (policy.mode != MergeMode::off && x.rows >= 2) {
            const BipartiteSplit split = split_alternating(x.rows, cfg.cls);
            const EdgeSet edges = bipartite_scores(step.merge_keys, split);
            EdgeSet selected;
            if (policy.mode == MergeMode::fixed_topr)
                selected = select_edges_topr(edges, static_cast<std::size_t>(policy.topr));
            else
                selected = select_edges_threshold(edges, policy.profile->taus[static_cast<std::size_t>(layer)]);
            if (!selected.empty()) {
                MergeStep ms = apply_merge(x, sz, selected);
                x = std::move(ms.tokens);
                map = compose(ms.map, map);
            }
        }
        x = vit_mlp_block(x, w.blocks[static_cast<std::size_t>(layer)]);
        counts.push_back(x.rows);
    }
    return {std::move(x), std::move(map), std::move(counts)};
}

void write_tokens_csv(const TokenMatrix& tokens, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    char buf[64];
    for (std::size_t i = 0; i < tokens.rows; ++i) {
        const double* row = tokens.row(i);
        for (std::size_t c = 0; c < tokens.cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
            if (c) f << ',';
            f << buf;
        }
        f << '\n';
    }
    if (!f)
        throw IoError("write failed: " + path);
}

} // namespace dyntok
