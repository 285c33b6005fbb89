#include "emolab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "emolab/errors.hpp"
#include "emolab/rng.hpp"

namespace emolab::stats {

double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Newton step against the exact CDF
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
    if (pdf > 0.0) x -= (cdf - p) / pdf;
    return x;
}

namespace {

// continued fraction for the incomplete beta (Lentz)
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("ibeta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = variance(a);
    const double vb = variance(b);
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if (pooled == 0.0) return 0.0;
    return (mean(a) - mean(b)) / std::sqrt(pooled);
}

StatSummary welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each sample needs size >= 2");
    for (double v : a)
        if (!std::isfinite(v)) throw std::invalid_argument("welch_t: non-finite value");
    for (double v : b)
        if (!std::isfinite(v)) throw std::invalid_argument("welch_t: non-finite value");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = variance(a);
    const double vb = variance(b);
    if (va == 0.0 && vb == 0.0) {
        if (mean(a) == mean(b)) {
            StatSummary s;
            s.statistic = 0.0;
            s.df = na + nb - 2.0;
            s.effect_size = 0.0;
            s.p_value = 1.0;
            s.n = {a.size(), b.size()};
            return s;
        }
        throw std::invalid_argument("welch_t: degenerate samples (zero variance in both)");
    }
    const double se2 = va / na + vb / nb;
    const double t = (mean(a) - mean(b)) / std::sqrt(se2);
    const double df = se2 * se2 / (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    StatSummary s;
    s.statistic = t;
    s.df = df;
    s.effect_size = cohens_d(a, b);
    s.p_value = student_t_two_sided_p(t, df);
    s.n = {a.size(), b.size()};
    return s;
}

double cohens_h(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
        throw std::invalid_argument("cohens_h: proportions must be in [0,1]");
    return 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));
}

std::pair<double, double> wilson_interval(long successes, long n, double confidence) {
    if (n < 1 || successes < 0 || successes > n) throw std::invalid_argument("wilson_interval: bad counts");
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("wilson_interval: bad confidence");
    const double z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = center - half;
    double hi = center + half;
    // the score interval hits the boundary exactly at p = 0 and p = 1
    if (successes == 0) lo = 0.0;
    if (successes == n) hi = 1.0;
    if (lo < 0.0) lo = 0.0;
    if (hi > 1.0) hi = 1.0;
    return {lo, hi};
}

std::pair<double, double> bootstrap_ci(std::size_t n_items, std::span<const int> strata,
                                       const std::function<double(std::span<const std::size_t>)>& statistic,
                                       std::size_t n_resamples, std::uint64_t seed, double confidence) {
    if (n_items == 0) throw std::invalid_argument("bootstrap_ci: empty sample");
    if (!strata.empty() && strata.size() != n_items)
        throw std::invalid_argument("bootstrap_ci: strata length mismatch");

    std::vector<std::vector<std::size_t>> groups;
    if (strata.empty()) {
        groups.emplace_back(n_items);
        std::iota(groups[0].begin(), groups[0].end(), 0);
    } else {
        const int max_s = *std::max_element(strata.begin(), strata.end());
        groups.resize(static_cast<std::size_t>(max_s) + 1);
        for (std::size_t i = 0; i < n_items; ++i) groups[static_cast<std::size_t>(strata[i])].push_back(i);
        for (const auto& g : groups)
            if (!g.empty() && g.size() < 2) throw std::invalid_argument("bootstrap_ci: stratum with < 2 items");
    }

    Rng rng(seed);
    std::vector<double> stats_out;
    stats_out.reserve(n_resamples);
    std::vector<std::size_t> idx(n_items);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        std::size_t k = 0;
        for (const auto& g : groups)
            for (std::size_t j = 0; j < g.size(); ++j) idx[k++] = g[rng.index(g.size())];
        stats_out.push_back(statistic(std::span<const std::size_t>(idx.data(), k)));
    }
    std::sort(stats_out.begin(), stats_out.end());
    const double alpha = 1.0 - confidence;
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(stats_out.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, stats_out.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return stats_out[lo] * (1.0 - frac) + stats_out[hi] * frac;
    };
    return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auroc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y != 0);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: both classes required");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // midranks over tie groups
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] != 0) rank_sum_pos += rank[k];
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double macro_ovr_auroc(const Mat& scores, std::span<const int> labels) {
    if (scores.rows != labels.size()) throw std::invalid_argument("macro_ovr_auroc: size mismatch");
    const std::size_t k = scores.cols;
    std::vector<std::size_t> class_count(k, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw std::invalid_argument("macro_ovr_auroc: label out of range");
        ++class_count[static_cast<std::size_t>(y)];
    }
    double total = 0.0;
    std::size_t used = 0;
    std::vector<double> col(scores.rows);
    std::vector<int> bin(scores.rows);
    for (std::size_t c = 0; c < k; ++c) {
        if (class_count[c] == 0) throw std::invalid_argument("macro_ovr_auroc: class absent");
        for (std::size_t r = 0; r < scores.rows; ++r) {
            col[r] = scores.at(r, c);
            bin[r] = labels[r] == static_cast<int>(c) ? 1 : 0;
        }
        total += auroc(col, bin);
        ++used;
    }
    return total / static_cast<double>(used);
}

}  // namespace emolab::stats
