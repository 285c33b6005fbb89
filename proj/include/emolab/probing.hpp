#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "emolab/corpus.hpp"
#include "emolab/model.hpp"
#include "emolab/store.hpp"
#include "emolab/util.hpp"

namespace emolab::probing {

enum class ProbeTask { binary_emotional_vs_neutral, eight_class };

std::string_view to_string(ProbeTask t);

struct ProbeSpec {
    ProbeTask task = ProbeTask::eight_class;
    Stream stream = Stream::residual;
    int layer = 0;
    int folds = 5;
    double l2_strength = 1.0;
    int max_iters = 500;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    bool retain_weights = false;
    int bootstrap_resamples = 1000;
};

// Multinomial logistic probe fitted by full-batch gradient descent with
// backtracking line search; feature standardization staged from the
// training rows only.
struct ProbeWeights {
    int n_classes = 0;
    std::size_t dim = 0;
    std::vector<double> w;  // [n_classes x dim] row-major
    std::vector<double> b;  // [n_classes]
    std::vector<double> feat_mean, feat_std;

    Mat predict_proba(const Mat& x) const;
};

struct ProbeResult {
    ProbeSpec spec;
    double auroc_mean = 0.0;
    std::vector<double> fold_aurocs;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<ProbeWeights> weights;  // present when spec.retain_weights
};

// Deterministic stratified assignment; per (class, fold) counts differ
// by at most one from an even split.
std::vector<int> stratified_fold_assignment(std::span<const int> y, int folds, std::uint64_t seed);

ProbeWeights fit_full(const Mat& x, std::span<const int> y, const ProbeSpec& spec);

// Cross-validated AUROC: per-fold rank AUROC (binary) or macro
// one-vs-rest AUROC (multiclass), mean over folds, and a stratified
// bootstrap CI over pooled out-of-fold scores.
ProbeResult train_probe(const Mat& x, std::span<const int> y, const ProbeSpec& spec);

struct SweepData {
    std::function<Mat(int layer)> matrix;
    int layer_count = 0;
    int n_layers = 0;  // denominator for normalized depth
    std::vector<int> labels;
};

struct LayerSweep {
    std::vector<ProbeResult> per_layer;
    int peak_layer = 0;
    double normalized_depth = 0.0;
};

LayerSweep layer_sweep(const SweepData& data, const ProbeSpec& spec_template);

// 8-class sweep input from one store; labels from the corpus emotions
SweepData sweep_from_store(const ActivationStore& store, const Corpus& corpus, Stream stream);
// binary sweep input: positives from `emotional`, negatives from `neutral`
SweepData binary_sweep_data(const ActivationStore& emotional, const ActivationStore& neutral, Stream stream);

// probe trained on the full train set (no CV), AUROC evaluated on the
// full test set
double transfer_auroc(const Mat& x_train, std::span<const int> y_train, const Mat& x_test,
                      std::span<const int> y_test, const ProbeSpec& spec);

struct DissociationReport {
    int layer = 0;  // peak layer of the binary sweep
    double binary_auroc = 0.0;
    double eight_class_auroc = 0.0;  // at that same layer
    double gap_pp = 0.0;
};

DissociationReport dissociation_report(const LayerSweep& binary, const LayerSweep& eight_class);

struct FrozenScoreSummary {
    std::vector<double> p_emotional;  // per stimulus, positive-class probability
    double mean = 0.0;
    double median = 0.0;
    int above_05 = 0;
    int above_08 = 0;
};

FrozenScoreSummary frozen_score(const ProbeWeights& probe, const Mat& x);

namespace detail {
// loss value; writes the analytic gradient (used by the finite-difference check)
double logistic_loss_grad(const Mat& x_std, std::span<const int> y, int n_classes, double l2,
                          std::span<const double> params, std::span<double> grad);
}  // namespace detail

}  // namespace emolab::probing
