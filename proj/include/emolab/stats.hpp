#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "emolab/util.hpp"

namespace emolab::stats {

// Generic container for a test result; absent fields were not computed
// by the producing operation.
struct StatSummary {
    double statistic = 0.0;
    std::optional<double> df;
    std::optional<double> effect_size;
    std::optional<double> p_value;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::vector<std::size_t> n;
};

double mean(std::span<const double> x);
// Bessel-corrected
double variance(std::span<const double> x);

// Inverse standard normal CDF (rational approximation with one
// erfc-based Newton refinement; ~1e-15 absolute).
double normal_quantile(double p);

// I_x(a, b) via the Lentz continued fraction; accuracy checked to 1e-10
// against high-precision fixtures.
double regularized_incomplete_beta(double a, double b, double x);

// two-sided tail probability of Student's t
double student_t_two_sided_p(double t, double df);

double cohens_d(std::span<const double> a, std::span<const double> b);

// Welch's t-test with Welch-Satterthwaite df; effect_size is Cohen's d.
StatSummary welch_t(std::span<const double> a, std::span<const double> b);

// h = 2 asin(sqrt(p1)) - 2 asin(sqrt(p2))
double cohens_h(double p1, double p2);

std::pair<double, double> wilson_interval(long successes, long n, double confidence);

// Percentile bootstrap over item indices. `strata` (same length as the
// item count) resamples within each stratum when non-empty. The
// statistic receives the resampled index multiset.
std::pair<double, double> bootstrap_ci(std::size_t n_items, std::span<const int> strata,
                                       const std::function<double(std::span<const std::size_t>)>& statistic,
                                       std::size_t n_resamples, std::uint64_t seed, double confidence = 0.95);

// Rank AUROC with midrank tie handling; labels are 0/1.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Unweighted mean of one-vs-rest AUROCs; scores is n x n_classes,
// column k scored against (label == k).
double macro_ovr_auroc(const Mat& scores, std::span<const int> labels);

}  // namespace emolab::stats
