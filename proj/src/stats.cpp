#include "dyntok/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dyntok {

MeanStd mean_std(const std::vector<double>& v) {
    if (v.empty())
        throw std::invalid_argument("mean_std: empty input");
    MeanStd r;
    for (double x : v)
        r.mean += x;
    r.mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        const double d = x - r.mean;
        var += d * d;
    }
    r.std = std::sqrt(var / static_cast<double>(v.size()));
    return r;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            r[idx[t]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2)
        throw std::invalid_argument("spearman: need at least 2 points");
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const MeanStd mx = mean_std(rx);
    const MeanStd my = mean_std(ry);
    if (mx.std == 0.0 || my.std == 0.0)
        return 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i)
        cov += (rx[i] - mx.mean) * (ry[i] - my.mean);
    cov /= static_cast<double>(rx.size());
    return cov / (mx.std * my.std);
}

std::string fmt_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace dyntok
