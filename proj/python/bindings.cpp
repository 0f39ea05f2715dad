#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyntok/calibrate.hpp"
#include "dyntok/dtome.hpp"
#include "dyntok/errors.hpp"
#include "dyntok/merge_map.hpp"
#include "dyntok/nn.hpp"
#include "dyntok/oracle.hpp"
#include "dyntok/profile.hpp"
#include "dyntok/rope.hpp"
#include "dyntok/stats.hpp"
#include "dyntok/synth.hpp"
#include "dyntok/token_matrix.hpp"
#include "dyntok/vit.hpp"
#include "dyntok/vtu.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace dyntok;

namespace {

std::vector<std::uint8_t> as_byte_vector(const py::bytes& b) {
    std::string s = b;
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

py::bytes as_py_bytes(const std::vector<std::uint8_t>& v) {
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

const AttentionMask* mask_ptr(const std::optional<AttentionMask>& m) {
    return m ? &*m : nullptr;
}

} // namespace

PYBIND11_MODULE(_dyntok, m) {
    m.doc() = "token merging and rotary attention reconstruction kernels";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_RuntimeError);
    py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_RuntimeError);

    py::class_<TokenMatrix>(m, "TokenMatrix")
        .def(py::init<std::size_t, std::size_t>(), "rows"_a, "cols"_a)
        .def(py::init<std::size_t, std::size_t, std::vector<double>>(),
             "rows"_a, "cols"_a, "data"_a)
        .def_static("from_rows",
                    [](const std::vector<std::vector<double>>& rows) {
                        const std::size_t r = rows.size();
                        const std::size_t c = r ? rows[0].size() : 0;
                        TokenMatrix out(r, c);
                        for (std::size_t i = 0; i < r; ++i) {
                            if (rows[i].size() != c)
                                throw ShapeError("from_rows: ragged input");
                            for (std::size_t j = 0; j < c; ++j)
                                out.at(i, j) = rows[i][j];
                        }
                        return out;
                    })
        .def_readonly("rows", &TokenMatrix::rows)
        .def_readonly("cols", &TokenMatrix::cols)
        .def_readwrite("data", &TokenMatrix::data)
        .def("at", [](const TokenMatrix& t, std::size_t r, std::size_t c) {
            if (r >= t.rows || c >= t.cols)
                throw ShapeError("at: index out of range");
            return t.at(r, c);
        })
        .def("set", [](TokenMatrix& t, std::size_t r, std::size_t c, double v) {
            if (r >= t.rows || c >= t.cols)
                throw ShapeError("set: index out of range");
            t.at(r, c) = v;
        })
        .def("tolist",
             [](const TokenMatrix& t) {
                 std::vector<std::vector<double>> out(t.rows);
                 for (std::size_t i = 0; i < t.rows; ++i)
                     out[i].assign(t.row(i), t.row(i) + t.cols);
                 return out;
             })
        .def("__eq__",
             [](const TokenMatrix& a, const TokenMatrix& b) {
                 return a.same_shape(b) && a.data == b.data;
             })
        .def("__repr__", [](const TokenMatrix& t) {
            return "TokenMatrix(" + std::to_string(t.rows) + "x" +
                   std::to_string(t.cols) + ")";
        });

    m.def("all_finite", &all_finite);
    m.def("max_abs_diff", &max_abs_diff);
    m.def("rel_frob_error", &rel_frob_error);

    py::class_<MergeMap>(m, "MergeMap")
        .def(py::init<std::size_t, std::vector<std::vector<std::size_t>>>(),
             "n_full"_a, "groups"_a)
        .def_static("identity", &MergeMap::identity)
        .def("n_full", &MergeMap::n_full)
        .def("group_count", &MergeMap::group_count)
        .def("groups", &MergeMap::groups)
        .def("group_of", &MergeMap::group_of)
        .def("sizes", [](const MergeMap& mm) { return mm.sizes(); })
        .def("to_json", [](const MergeMap& mm) { return merge_map_to_json_text(mm); })
        .def_static("from_json", &merge_map_from_json_text)
        .def(py::self == py::self)
        .def("__repr__", [](const MergeMap& mm) {
            return "MergeMap(" + std::to_string(mm.n_full()) + "->" +
                   std::to_string(mm.group_count()) + ")";
        });

    m.def("expand", &expand);
    m.def("remerge_average", &remerge_average);
    m.def("compose", &compose, "outer"_a, "inner"_a);

    py::class_<BipartiteSplit>(m, "BipartiteSplit")
        .def_readonly("set_a", &BipartiteSplit::set_a)
        .def_readonly("set_b", &BipartiteSplit::set_b);

    py::class_<Edge>(m, "Edge")
        .def(py::init([](std::size_t src, std::size_t dst, double score) {
                 return Edge{src, dst, score};
             }),
             "src"_a, "dst"_a, "score"_a = 0.0)
        .def_readwrite("src", &Edge::src)
        .def_readwrite("dst", &Edge::dst)
        .def_readwrite("score", &Edge::score)
        .def("__repr__", [](const Edge& e) {
            return "Edge(" + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                   ", " + std::to_string(e.score) + ")";
        });

    py::class_<MergeStep>(m, "MergeStep")
        .def_readonly("tokens", &MergeStep::tokens)
        .def_readonly("map", &MergeStep::map);

    m.def("split_alternating", &split_alternating, "n"_a, "protect_first"_a = true);
    m.def("bipartite_scores", &bipartite_scores);
    m.def("select_edges_threshold", &select_edges_threshold, "edges"_a, "tau"_a);
    m.def("select_edges_topr", &select_edges_topr, "edges"_a, "r"_a);
    m.def("apply_merge", &apply_merge, "x"_a, "layer_sizes"_a, "selected"_a);
    m.def("size_weighted_attention", &size_weighted_attention,
          "q"_a, "k"_a, "v"_a, "sizes"_a, "scale"_a);

    py::class_<MergeSchedule>(m, "MergeSchedule")
        .def(py::init([](const std::string& kind, int r_bar) {
                 return MergeSchedule{schedule_kind_from_name(kind), r_bar};
             }),
             "kind"_a = "constant", "r_bar"_a = 0)
        .def_property(
            "kind",
            [](const MergeSchedule& s) { return schedule_kind_name(s.kind); },
            [](MergeSchedule& s, const std::string& k) {
                s.kind = schedule_kind_from_name(k);
            })
        .def_readwrite("r_bar", &MergeSchedule::r_bar);

    m.def("schedule_targets", &schedule_targets, "schedule"_a, "layers"_a);
    m.def("calibrate_layer", &calibrate_layer, "scores"_a, "k"_a);

    py::class_<ThresholdProfile>(m, "ThresholdProfile")
        .def(py::init<>())
        .def_readwrite("taus", &ThresholdProfile::taus)
        .def_readwrite("schedule", &ThresholdProfile::schedule)
        .def_readwrite("batch_size", &ThresholdProfile::batch_size)
        .def_readwrite("num_batches", &ThresholdProfile::num_batches)
        .def_readwrite("corpus_id", &ThresholdProfile::corpus_id)
        .def_readwrite("similarity", &ThresholdProfile::similarity)
        .def("to_json", [](const ThresholdProfile& p) { return profile_to_json_text(p); })
        .def_static("from_json", &profile_from_json_text);

    m.def("save_profile", &save_profile, "profile"_a, "path"_a);
    m.def("load_profile", &load_profile, "path"_a);

    py::class_<RopeAngles>(m, "RopeAngles")
        .def_readonly("head_dim", &RopeAngles::head_dim)
        .def_readonly("n_positions", &RopeAngles::n_positions)
        .def("at", &RopeAngles::at, "pos"_a, "k"_a);

    m.def("make_rope_angles",
          [](int head_dim, std::size_t n_positions, double base) {
              return make_rope_angles(RopeConfig{head_dim, base}, n_positions);
          },
          "head_dim"_a, "n_positions"_a, "base"_a = 10000.0);

    py::class_<AttentionMask>(m, "AttentionMask")
        .def(py::init<std::size_t, std::vector<double>>(), "n"_a, "entries"_a)
        .def_static("causal", &AttentionMask::causal)
        .def_readonly("n", &AttentionMask::n)
        .def("at", &AttentionMask::at, "p"_a, "q"_a);

    py::class_<LayerNormParams>(m, "LayerNormParams")
        .def(py::init<>())
        .def_readwrite("gamma", &LayerNormParams::gamma)
        .def_readwrite("beta", &LayerNormParams::beta)
        .def_readwrite("eps", &LayerNormParams::eps);

    py::class_<AttentionWeights>(m, "AttentionWeights")
        .def(py::init<>())
        .def_readwrite("heads", &AttentionWeights::heads)
        .def_readwrite("wq", &AttentionWeights::wq)
        .def_readwrite("wk", &AttentionWeights::wk)
        .def_readwrite("wv", &AttentionWeights::wv)
        .def_readwrite("wo", &AttentionWeights::wo)
        .def_readwrite("bq", &AttentionWeights::bq)
        .def_readwrite("bk", &AttentionWeights::bk)
        .def_readwrite("bv", &AttentionWeights::bv)
        .def_readwrite("bo", &AttentionWeights::bo)
        .def("dim", &AttentionWeights::dim)
        .def("head_dim", &AttentionWeights::head_dim);

    py::class_<MlpWeights>(m, "MlpWeights")
        .def(py::init<>())
        .def_readwrite("w1", &MlpWeights::w1)
        .def_readwrite("b1", &MlpWeights::b1)
        .def_readwrite("w2", &MlpWeights::w2)
        .def_readwrite("b2", &MlpWeights::b2);

    py::class_<DecoderLayerWeights>(m, "DecoderLayerWeights")
        .def(py::init<>())
        .def_readwrite("ln1", &DecoderLayerWeights::ln1)
        .def_readwrite("attn", &DecoderLayerWeights::attn)
        .def_readwrite("ln2", &DecoderLayerWeights::ln2)
        .def_readwrite("mlp", &DecoderLayerWeights::mlp);

    m.def("make_attention_weights", &make_attention_weights,
          "dim"_a, "heads"_a, "seed"_a);
    m.def("make_decoder_weights", &make_decoder_weights,
          "dim"_a, "heads"_a, "hidden"_a, "seed"_a);

    py::class_<UniqueSequence>(m, "UniqueSequence")
        .def(py::init([](TokenMatrix e_un, MergeMap map) {
                 return UniqueSequence{std::move(e_un), std::move(map)};
             }),
             "e_un"_a, "map"_a)
        .def_readwrite("e_un", &UniqueSequence::e_un)
        .def_readwrite("map", &UniqueSequence::map);

    py::class_<GramPair>(m, "GramPair")
        .def_readonly("qk", &GramPair::qk)
        .def_readonly("qxk", &GramPair::qxk);

    py::class_<SimilarityStats>(m, "SimilarityStats")
        .def(py::init<>())
        .def_readwrite("gram_mults", &SimilarityStats::gram_mults)
        .def_readwrite("assembly_mults", &SimilarityStats::assembly_mults)
        .def_readwrite("attn_mults", &SimilarityStats::attn_mults);

    m.def("rope_similarity_entry", &rope_similarity_entry,
          "q1"_a, "q2"_a, "k1"_a, "k2"_a, "dtheta"_a);
    m.def("gram_pair", &gram_pair, "q_un"_a, "k_un"_a);
    m.def("vtu_similarity",
          [](const TokenMatrix& q_un, const TokenMatrix& k_un, const MergeMap& map,
             const RopeAngles& angles) {
              return vtu_similarity(q_un, k_un, map, angles);
          },
          "q_un"_a, "k_un"_a, "map"_a, "angles"_a);
    m.def("vtu_similarity_stats",
          [](const TokenMatrix& q_un, const TokenMatrix& k_un, const MergeMap& map,
             const RopeAngles& angles) {
              SimilarityStats s;
              TokenMatrix r = vtu_similarity(q_un, k_un, map, angles, &s);
              return py::make_tuple(r, s);
          },
          "q_un"_a, "k_un"_a, "map"_a, "angles"_a);
    m.def("vtu_attention",
          [](const UniqueSequence& seq, const AttentionWeights& w,
             const RopeAngles& angles, const std::optional<AttentionMask>& mask) {
              return vtu_attention(seq, w, angles, mask_ptr(mask));
          },
          "seq"_a, "weights"_a, "angles"_a, "mask"_a = py::none());
    m.def("vtu_attention_stats",
          [](const UniqueSequence& seq, const AttentionWeights& w,
             const RopeAngles& angles, const std::optional<AttentionMask>& mask) {
              SimilarityStats s;
              UniqueSequence r = vtu_attention(seq, w, angles, mask_ptr(mask), &s);
              return py::make_tuple(r, s);
          },
          "seq"_a, "weights"_a, "angles"_a, "mask"_a = py::none());
    m.def("decoder_layer_vtu",
          [](const UniqueSequence& seq, const DecoderLayerWeights& w,
             const RopeAngles& angles, const std::optional<AttentionMask>& mask) {
              return decoder_layer_vtu(seq, w, angles, mask_ptr(mask));
          },
          "seq"_a, "weights"_a, "angles"_a, "mask"_a = py::none());

    py::class_<FlopsReport>(m, "FlopsReport")
        .def_readonly("n_full", &FlopsReport::n_full)
        .def_readonly("n_unique", &FlopsReport::n_unique)
        .def_readonly("d_total", &FlopsReport::d_total)
        .def_readonly("full_mflops", &FlopsReport::full_mflops)
        .def_readonly("vtu_mflops", &FlopsReport::vtu_mflops)
        .def_static("csv_header", &FlopsReport::csv_header)
        .def("csv_line", &FlopsReport::csv_line);

    m.def("flops_model", &flops_model, "n"_a, "n_un"_a, "heads"_a, "head_dim"_a);
    m.def("format_mflops", &format_mflops);

    m.def("full_rope_attention",
          [](const TokenMatrix& e, const RopeAngles& angles, const AttentionWeights& w,
             const std::optional<AttentionMask>& mask) {
              return oracle::full_rope_attention(e, angles, w, mask_ptr(mask));
          },
          "e"_a, "angles"_a, "weights"_a, "mask"_a = py::none());
    m.def("reference_vtu",
          [](const UniqueSequence& seq, const AttentionWeights& w,
             const RopeAngles& angles, const std::optional<AttentionMask>& mask) {
              return oracle::reference_vtu(seq, w, angles, mask_ptr(mask));
          },
          "seq"_a, "weights"_a, "angles"_a, "mask"_a = py::none());
    m.def("duplicated_attention", &oracle::duplicated_attention,
          "q_row"_a, "k_un"_a, "v_un"_a, "sizes"_a, "scale"_a);
    m.def("reference_threshold", &oracle::reference_threshold, "scores"_a, "k"_a);

    py::class_<Image>(m, "Image")
        .def(py::init<>())
        .def(py::init([](std::size_t h, std::size_t w, std::vector<double> pixels) {
                 return Image{h, w, std::move(pixels)};
             }),
             "h"_a, "w"_a, "pixels"_a)
        .def_readwrite("h", &Image::h)
        .def_readwrite("w", &Image::w)
        .def_readwrite("pixels", &Image::pixels);

    py::class_<ViTConfig>(m, "ViTConfig")
        .def(py::init<>())
        .def_readwrite("layers", &ViTConfig::layers)
        .def_readwrite("dim", &ViTConfig::dim)
        .def_readwrite("heads", &ViTConfig::heads)
        .def_readwrite("patch", &ViTConfig::patch)
        .def_readwrite("grid_rows", &ViTConfig::grid_rows)
        .def_readwrite("grid_cols", &ViTConfig::grid_cols)
        .def_readwrite("cls", &ViTConfig::cls)
        .def_readwrite("mlp_hidden", &ViTConfig::mlp_hidden)
        .def("hidden", &ViTConfig::hidden)
        .def("n_tokens", &ViTConfig::n_tokens)
        .def("validate", &ViTConfig::validate);

    py::class_<EncoderSpec>(m, "EncoderSpec")
        .def(py::init<>())
        .def_readwrite("cfg", &EncoderSpec::cfg)
        .def_readwrite("seed", &EncoderSpec::seed)
        .def("to_json", [](const EncoderSpec& s) { return encoder_spec_to_json_text(s); })
        .def_static("from_json", &encoder_spec_from_json_text);

    m.def("load_encoder_spec", &load_encoder_spec, "path"_a);

    py::class_<ViTWeights>(m, "ViTWeights")
        .def_readonly("cfg", &ViTWeights::cfg)
        .def_readonly("seed", &ViTWeights::seed);

    m.def("make_vit_weights", &make_vit_weights, "cfg"_a, "seed"_a);
    m.def("save_weights", &save_weights, "weights"_a, "path"_a);
    m.def("load_weights", &load_weights, "path"_a);
    m.def("patchify", &patchify, "img"_a, "weights"_a);

    py::class_<EncodeResult>(m, "EncodeResult")
        .def_readonly("tokens", &EncodeResult::tokens)
        .def_readonly("map", &EncodeResult::map)
        .def_readonly("layer_counts", &EncodeResult::layer_counts);

    m.def("encode",
          [](const Image& img, const ViTWeights& w, const std::string& mode, int topr,
             const std::optional<ThresholdProfile>& profile) {
              MergePolicy policy;
              if (mode == "off") {
                  policy.mode = MergeMode::off;
              } else if (mode == "topr") {
                  policy.mode = MergeMode::fixed_topr;
                  policy.topr = topr;
              } else if (mode == "dynamic") {
                  policy.mode = MergeMode::dynamic;
                  if (!profile)
                      throw ConfigError("encode: dynamic mode needs a profile");
                  policy.profile = &*profile;
              } else {
                  throw ConfigError("encode: unknown mode '" + mode + "'");
              }
              return encode(img, w, policy);
          },
          "img"_a, "weights"_a, "mode"_a = "off", "topr"_a = 0,
          "profile"_a = py::none());

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("profile", &CalibrationResult::profile)
        .def_readonly("targets", &CalibrationResult::targets)
        .def_readonly("batch_taus", &CalibrationResult::batch_taus)
        .def_readonly("batch_merged", &CalibrationResult::batch_merged)
        .def_readonly("final_counts", &CalibrationResult::final_counts)
        .def_readonly("mean_final_tokens", &CalibrationResult::mean_final_tokens);

    m.def("calibrate",
          [](const ViTWeights& encoder, const std::vector<Image>& images,
             const MergeSchedule& schedule, int batch_size, int num_batches,
             std::uint64_t seed, int threads, const std::string& corpus_id) {
              MemoryImageSource src(images);
              CalibrationOptions opt;
              opt.batch_size = batch_size;
              opt.num_batches = num_batches;
              opt.seed = seed;
              opt.threads = threads;
              opt.corpus_id = corpus_id;
              return calibrate(encoder, src, schedule, opt);
          },
          "encoder"_a, "images"_a, "schedule"_a, "batch_size"_a = 1,
          "num_batches"_a = 1, "seed"_a = 0, "threads"_a = 1, "corpus_id"_a = "");

    m.def("mix_seed", &mix_seed);
    m.def("synth_image",
          [](std::size_t h, std::size_t w, int rects, double sigma,
             std::uint64_t seed) {
              return as_py_bytes(synth_image(h, w, rects, sigma, seed));
          },
          "h"_a, "w"_a, "rects"_a, "sigma"_a, "seed"_a);
    m.def("bytes_to_image",
          [](const py::bytes& b, std::size_t h, std::size_t w) {
              return bytes_to_image(as_byte_vector(b), h, w);
          },
          "bytes"_a, "h"_a, "w"_a);
    m.def("complexity_score",
          [](const py::bytes& b, std::size_t h, std::size_t w) {
              return complexity_score(as_byte_vector(b), h, w);
          },
          "bytes"_a, "h"_a, "w"_a);

    m.def("spearman", &spearman, "x"_a, "y"_a);
    m.def("mean_std", [](const std::vector<double>& v) {
        const MeanStd s = mean_std(v);
        return py::make_tuple(s.mean, s.std);
    });

    m.attr("__version__") = "0.1.0";
}
