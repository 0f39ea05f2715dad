#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dyntok/errors.hpp"

namespace dyntok {

// Rotary position embedding over adjacent coordinate pairs (2k, 2k+1) of one
// attention head. Pair k at position m is rotated by m * base^(-2k/dim).
struct RopeConfig {
    int dim = 0;          // head dimension, even and >= 2
    double base = 10000.0;

    void validate() const {
        if (dim < 2 || dim % 2 != 0)
            throw ConfigError("RopeConfig: dim must be even and >= 2");
        if (!(base > 1.0))
            throw ConfigError("RopeConfig: base must be > 1");
    }
};

// Precomputed angle table theta[pos][k] for k in [0, dim/2).
struct RopeAngles {
    int head_dim = 0;
    std::size_t n_positions = 0;
    std::vector<double> theta; // n_positions * (head_dim/2), position-major

    int half() const { return head_dim / 2; }
    double at(std::size_t pos, int k) const {
        return theta[pos * static_cast<std::size_t>(half()) + static_cast<std::size_t>(k)];
    }
    const double* pos_row(std::size_t pos) const {
        return theta.data() + pos * static_cast<std::size_t>(half());
    }
};

inline RopeAngles make_rope_angles(const RopeConfig& cfg, std::size_t n_positions) {
    cfg.validate();
    RopeAngles a;
    a.head_dim = cfg.dim;
    a.n_positions = n_positions;
    const int half = cfg.dim / 2;
    a.theta.resize(n_positions * static_cast<std::size_t>(half));
    for (std::size_t m = 0; m < n_positions; ++m)
        for (int k = 0; k < half; ++k)
            a.theta[m * static_cast<std::size_t>(half) + static_cast<std::size_t>(k)] =
                static_cast<double>(m) *
                std::pow(cfg.base, -2.0 * static_cast<double>(k) / static_cast<double>(cfg.dim));
    return a;
}

// Additive attention mask: entries are 0 (visible) or -infinity (blocked).
struct AttentionMask {
    std::size_t n = 0;
    std::vector<double> add; // n*n, row = query, col = key

    AttentionMask() = default;

    AttentionMask(std::size_t n_, std::vector<double> entries)
        : n(n_), add(std::move(entries)) {
        if (add.size() != n * n)
            throw ShapeError("AttentionMask: entries size must be n*n");
        for (double v : add)
            if (!(v == 0.0 || v == -std::numeric_limits<double>::infinity()))
                throw ShapeError("AttentionMask: entries must be 0 or -inf");
    }

    static AttentionMask causal(std::size_t n) {
        AttentionMask m;
        m.n = n;
        m.add.assign(n * n, 0.0);
        const double ninf = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                m.add[p * n + q] = ninf;
        return m;
    }

    double at(std::size_t p, std::size_t q) const { return add[p * n + q]; }
};

} // namespace dyntok
