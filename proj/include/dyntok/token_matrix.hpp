#pragma once

#include <cstddef>
#include <cmath>
#include <vector>

#include "dyntok/errors.hpp"

namespace dyntok {

// Dense row-major matrix of doubles. Rows are tokens, columns are feature
// dimensions. Kept deliberately plain so hot loops can index `data` directly.
struct TokenMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    TokenMatrix() = default;

    TokenMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), data(r * c, 0.0) {}

    TokenMatrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols)
            throw ShapeError("TokenMatrix: data size does not match rows*cols");
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const TokenMatrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

inline bool all_finite(const TokenMatrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// Frobenius norm of the difference, normalized by the reference norm.
// Falls back to the absolute norm when the reference is (near) zero.
inline double rel_frob_error(const TokenMatrix& got, const TokenMatrix& ref) {
    if (!got.same_shape(ref))
        throw ShapeError("rel_frob_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        const double d = got.data[i] - ref.data[i];
        num += d * d;
        den += ref.data[i] * ref.data[i];
    }
    num = std::sqrt(num);
    den = std::sqrt(den);
    return den > 1e-300 ? num / den : num;
}

inline double max_abs_diff(const TokenMatrix& a, const TokenMatrix& b) {
    if (!a.same_shape(b))
        throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = std::fabs(a.data[i] - b.data[i]);
        if (d > m) m = d;
    }
    return m;
}

} // namespace dyntok
