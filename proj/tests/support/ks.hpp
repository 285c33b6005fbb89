#pragma once

// One-sample Kolmogorov-Smirnov test against U(0,1), used as a
// calibration oracle for permutation p-values and Welch p-values.

#include <algorithm>
#include <cmath>
#include <vector>

namespace test_support {

inline double ks_statistic_uniform(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(x[i] - lo, hi - x[i]));
    }
    return d;
}

// asymptotic Kolmogorov survival function with Stephens' finite-n factor
inline double ks_uniform_pvalue(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double d = ks_statistic_uniform(x);
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        p += sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        sign = -sign;
    }
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace test_support
