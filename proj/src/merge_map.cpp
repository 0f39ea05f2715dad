#include "dyntok/merge_map.hpp"

#include <algorithm>

#include "json.hpp"

namespace dyntok {

MergeMap::MergeMap(std::size_t n_full, std::vector<std::vector<std::size_t>> groups)
    : n_full_(n_full), groups_(std::move(groups)) {
    if (n_full_ == 0)
        throw ShapeError("MergeMap: n_full must be positive");
    for (auto& g : groups_) {
        if (g.empty())
            throw ShapeError("MergeMap: empty group");
        std::sort(g.begin(), g.end());
    }
    std::sort(groups_.begin(), groups_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    group_of_.assign(n_full_, groups_.size());
    for (std::size_t j = 0; j < groups_.size(); ++j) {
        for (std::size_t p : groups_[j]) {
            if (p >= n_full_)
                throw ShapeError("MergeMap: position out of range");
            if (group_of_[p] != groups_.size())
                throw ShapeError("MergeMap: position in two groups");
            group_of_[p] = j;
        }
    }
    for (std::size_t p = 0; p < n_full_; ++p)
        if (group_of_[p] == groups_.size())
            throw ShapeError("MergeMap: position not covered by any group");
}

MergeMap MergeMap::identity(std::size_t n) {
    if (n == 0)
        throw ShapeError("MergeMap::identity: n must be positive");
    std::vector<std::vector<std::size_t>> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = {i};
    return MergeMap(n, std::move(g));
}

std::size_t MergeMap::group_of(std::size_t p) const {
    if (p >= n_full_)
        throw ShapeError("MergeMap::group_of: position out of range");
    return group_of_[p];
}

SizeVector MergeMap::sizes() const {
    SizeVector s(groups_.size());
    for (std::size_t j = 0; j < groups_.size(); ++j)
        s[j] = groups_[j].size();
    return s;
}

MergeMap merge_map_identity(std::size_t n) { return MergeMap::identity(n); }

TokenMatrix expand(const MergeMap& map, const TokenMatrix& e_un) {
    if (e_un.rows != map.group_count())
        throw ShapeError("expand: row count does not match group count");
    TokenMatrix out(map.n_full(), e_un.cols);
    for (std::size_t j = 0; j < map.group_count(); ++j) {
        const double* src = e_un.row(j);
        for (std::size_t p : map.group(j)) {
            double* dst = out.row(p);
            for (std::size_t c = 0; c < e_un.cols; ++c)
                dst[c] = src[c];
        }
    }
    return out;
}

TokenMatrix remerge_average(const MergeMap& map, const TokenMatrix& y) {
    if (y.rows != map.n_full())
        throw ShapeError("remerge_average: row count does not match n_full");
    TokenMatrix out(map.group_count(), y.cols);
    for (std::size_t j = 0; j < map.group_count(); ++j) {
        double* dst = out.row(j);
        for (std::size_t p : map.group(j)) {
            const double* src = y.row(p);
            for (std::size_t c = 0; c < y.cols; ++c)
                dst[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(map.group(j).size());
        for (std::size_t c = 0; c < y.cols; ++c)
            dst[c] *= inv;
    }
    return out;
}

MergeMap compose(const MergeMap& outer, const MergeMap& inner) {
    if (outer.n_full() != inner.group_count())
        throw ShapeError("compose: outer.n_full must equal inner.group_count");
    std::vector<std::vector<std::size_t>> groups(outer.group_count());
    for (std::size_t k = 0; k < outer.group_count(); ++k) {
        for (std::size_t mid : outer.group(k)) {
            const auto& g = inner.group(mid);
            groups[k].insert(groups[k].end(), g.begin(), g.end());
        }
    }
    return MergeMap(inner.n_full(), std::move(groups));
}

SizeVector sizes(const MergeMap& map) { return map.sizes(); }

std::string merge_map_to_json_text(const MergeMap& map) {
    nlohmann::ordered_json j;
    j["n_full"] = map.n_full();
    j["groups"] = map.groups();
    return j.dump();
}

MergeMap merge_map_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("merge map: invalid JSON: ") + e.what());
    }
    try {
        return MergeMap(j.at("n_full").get<std::size_t>(),
                        j.at("groups").get<std::vector<std::vector<std::size_t>>>());
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("merge map: bad field: ") + e.what());
    }
}

} // namespace dyntok
