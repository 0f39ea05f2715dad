#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dyntok {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population
};

MeanStd mean_std(const std::vector<double>& v);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// "%.6g" style formatting used for CSV floats.
std::string fmt_sig6(double v);

} // namespace dyntok
