#include "dyntok/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace dyntok {

std::string schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::reverse_linear: return "reverse_linear";
    }
    throw ConfigError("schedule_kind_name: unknown kind");
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "constant") return ScheduleKind::constant;
    if (name == "linear") return ScheduleKind::linear;
    if (name == "reverse_linear") return ScheduleKind::reverse_linear;
    throw ConfigError("unknown schedule kind: " + name);
}

std::vector<int> schedule_targets(const MergeSchedule& s, int layers) {
    if (layers < 1)
        throw ConfigError("schedule_targets: layers must be >= 1");
    if (s.r_bar < 0)
        throw ConfigError("schedule_targets: r_bar must be >= 0");

    if (s.kind == ScheduleKind::constant || layers == 1)
        return std::vector<int>(static_cast<std::size_t>(layers), s.r_bar);

    const long total = static_cast<long>(layers) * s.r_bar;
    std::vector<double> f(static_cast<std::size_t>(layers));
    std::vector<int> r(static_cast<std::size_t>(layers));
    long sum = 0;
    for (int i = 0; i < layers; ++i) {
        f[static_cast<std::size_t>(i)] =
            2.0 * s.r_bar * static_cast<double>(layers - 1 - i) / static_cast<double>(layers - 1);
        r[static_cast<std::size_t>(i)] =
            static_cast<int>(std::llround(f[static_cast<std::size_t>(i)]));
        sum += r[static_cast<std::size_t>(i)];
    }
    while (sum < total) {
        int pick = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < layers; ++i) {
            const double resid = f[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)];
            if (resid > best) {
                best = resid;
                pick = i;
            }
        }
        ++r[static_cast<std::size_t>(pick)];
        ++sum;
    }
    while (sum > total) {
        int pick = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < layers; ++i) {
            if (r[static_cast<std::size_t>(i)] <= 0) continue;
            const double resid = f[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)];
            if (resid < best) {
                best = resid;
                pick = i;
            }
        }
        --r[static_cast<std::size_t>(pick)];
        --sum;
    }
    if (s.kind == ScheduleKind::reverse_linear)
        std::reverse(r.begin(), r.end());
    return r;
}

double calibrate_layer(const std::vector<double>& scores, std::size_t k) {
    if (k == 0)
        return std::numeric_limits<double>::infinity();
    if (k >= scores.size())
        return -std::numeric_limits<double>::infinity();
    std::vector<double> s = scores;
    auto kth = s.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(s.begin(), kth, s.end(), std::greater<double>());
    return *kth;
}

namespace {

nlohmann::ordered_json tau_to_json(double t) {
    if (std::isinf(t))
        return t > 0 ? "inf" : "-inf";
    return t;
}

double tau_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw SchemaError("profile: unrecognized threshold string: " + s);
    }
    if (!j.is_number())
        throw SchemaError("profile: threshold must be a number or inf string");
    return j.get<double>();
}

} // namespace

std::string profile_to_json_text(const ThresholdProfile& p) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["taus"] = nlohmann::ordered_json::array();
    for (double t : p.taus)
        j["taus"].push_back(tau_to_json(t));
    j["schedule"] = {{"kind", schedule_kind_name(p.schedule.kind)},
                     {"r_bar", p.schedule.r_bar}};
    j["batch_size"] = p.batch_size;
    j["num_batches"] = p.num_batches;
    j["corpus_id"] = p.corpus_id;
    j["similarity"] = p.similarity;
    return j.dump(2) + "\n";
}

ThresholdProfile profile_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("profile: invalid JSON: ") + e.what());
    }
    try {
        if (!j.contains("version") || !j["version"].is_number_integer())
            throw SchemaError("profile: missing version");
        if (j["version"].get<int>() != 1)
            throw SchemaError("profile: unsupported version");
        ThresholdProfile p;
        if (!j.contains("taus") || !j["taus"].is_array())
            throw SchemaError("profile: missing taus");
        for (const auto& t : j["taus"])
            p.taus.push_back(tau_from_json(t));
        p.schedule.kind = schedule_kind_from_name(j.at("schedule").at("kind").get<std::string>());
        p.schedule.r_bar = j.at("schedule").at("r_bar").get<int>();
        p.batch_size = j.at("batch_size").get<int>();
        p.num_batches = j.at("num_batches").get<int>();
        p.corpus_id = j.at("corpus_id").get<std::string>();
        p.similarity = j.at("similarity").get<std::string>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("profile: bad field: ") + e.what());
    }
}

void save_profile(const ThresholdProfile& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    const std::string text = profile_to_json_text(p);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw IoError("write failed: " + path);
}

ThresholdProfile load_profile(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return profile_from_json_text(text);
}

} // namespace dyntok
