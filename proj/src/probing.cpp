#include "emolab/probing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emolab/errors.hpp"
#include "emolab/rng.hpp"
#include "emolab/stats.hpp"

namespace emolab::probing {

namespace {

int class_count(std::span<const int> y) {
    int k = 0;
    for (int v : y) k = std::max(k, v + 1);
    return k;
}

struct Standardizer {
    std::vector<double> mean, std;

    static Standardizer fit(const Mat& x, std::span<const std::size_t> rows) {
        Standardizer s;
        s.mean.assign(x.cols, 0.0);
        s.std.assign(x.cols, 0.0);
        for (auto r : rows)
            for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x.at(r, j);
        for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] /= static_cast<double>(rows.size());
        for (auto r : rows)
            for (std::size_t j = 0; j < x.cols; ++j) {
                const double d = x.at(r, j) - s.mean[j];
                s.std[j] += d * d;
            }
        for (std::size_t j = 0; j < x.cols; ++j) {
            s.std[j] = std::sqrt(s.std[j] / static_cast<double>(rows.size()));
            if (s.std[j] < 1e-12) s.std[j] = 1.0;  // constant feature contributes zero
        }
        return s;
    }

    Mat apply(const Mat& x, std::span<const std::size_t> rows) const {
        Mat out(rows.size(), x.cols);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < x.cols; ++j) out.at(i, j) = (x.at(rows[i], j) - mean[j]) / std[j];
        return out;
    }
};

void softmax_row(double* z, std::size_t k) {
    double m = z[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, z[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        z[i] = std::exp(z[i] - m);
        s += z[i];
    }
    for (std::size_t i = 0; i < k; ++i) z[i] /= s;
}

Mat forward_proba(const Mat& x_std, std::span<const double> params, int n_classes) {
    const std::size_t d = x_std.cols;
    const std::size_t kc = static_cast<std::size_t>(n_classes);
    const double* w = params.data();
    const double* b = params.data() + kc * d;
    Mat probs(x_std.rows, kc);
    for (std::size_t i = 0; i < x_std.rows; ++i) {
        double* row = probs.row(i);
        for (std::size_t c = 0; c < kc; ++c) {
            double z = b[c];
            const double* wc = w + c * d;
            const double* xi = x_std.row(i);
            for (std::size_t j = 0; j < d; ++j) z += wc[j] * xi[j];
            row[c] = z;
        }
        softmax_row(row, kc);
    }
    return probs;
}

// minimises the loss from detail::logistic_loss_grad by gradient descent
// with Armijo backtracking; stops at ||grad||_inf < tol
std::vector<double> optimize(const Mat& x_std, std::span<const int> y, int n_classes, const ProbeSpec& spec) {
    const std::size_t d = x_std.cols;
    const std::size_t kc = static_cast<std::size_t>(n_classes);
    std::vector<double> params(kc * d + kc, 0.0);
    std::vector<double> grad(params.size());
    std::vector<double> trial(params.size());
    std::vector<double> dummy(params.size());

    double loss = detail::logistic_loss_grad(x_std, y, n_classes, spec.l2_strength, params, grad);
    for (int it = 0; it < spec.max_iters; ++it) {
        double gmax = 0.0;
        double gsq = 0.0;
        for (double g : grad) {
            gmax = std::max(gmax, std::abs(g));
            gsq += g * g;
        }
        if (gmax < spec.tol) break;

        double step = 1.0;
        double new_loss = loss;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - step * grad[i];
            new_loss = detail::logistic_loss_grad(x_std, y, n_classes, spec.l2_strength, trial,
                                                  std::span<double>(dummy));
            if (new_loss <= loss - 1e-4 * step * gsq) break;
            step *= 0.5;
        }
        params.swap(trial);
        loss = detail::logistic_loss_grad(x_std, y, n_classes, spec.l2_strength, params, grad);
        (void)new_loss;
    }
    return params;
}

double fold_auroc(const Mat& probs, std::span<const int> y, ProbeTask task) {
    if (task == ProbeTask::binary_emotional_vs_neutral) {
        std::vector<double> scores(probs.rows);
        std::vector<int> labels(y.begin(), y.end());
        for (std::size_t i = 0; i < probs.rows; ++i) scores[i] = probs.at(i, 1);
        return stats::auroc(scores, labels);
    }
    return stats::macro_ovr_auroc(probs, y);
}

void validate_input(const Mat& x, std::span<const int> y, const ProbeSpec& spec, bool for_cv) {
    if (x.rows != y.size()) throw ValidationError("probe: feature rows and labels disagree");
    if (x.rows == 0) throw ValidationError("probe: empty input");
    for (double v : x.data)
        if (!std::isfinite(v)) throw ValidationError("probe: non-finite feature");
    const int k = class_count(y);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int v : y) {
        if (v < 0) throw ValidationError("probe: negative label");
        ++counts[static_cast<std::size_t>(v)];
    }
    int present = 0;
    for (int c : counts) present += c > 0;
    if (present < 2) throw ValidationError("probe: degenerate input (single class)");
    if (for_cv) {
        if (spec.folds < 2) throw ValidationError("probe: folds must be >= 2");
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c] > 0 && counts[c] < spec.folds)
                throw ValidationError("probe: class " + std::to_string(c) + " has fewer samples than folds");
    }
}

}  // namespace

std::string_view to_string(ProbeTask t) {
    return t == ProbeTask::binary_emotional_vs_neutral ? "binary_emotional_vs_neutral" : "eight_class";
}

namespace detail {

double logistic_loss_grad(const Mat& x_std, std::span<const int> y, int n_classes, double l2,
                          std::span<const double> params, std::span<double> grad) {
    const std::size_t d = x_std.cols;
    const std::size_t n = x_std.rows;
    const std::size_t kc = static_cast<std::size_t>(n_classes);
    const double* w = params.data();
    const double* b = params.data() + kc * d;

    std::fill(grad.begin(), grad.end(), 0.0);
    double* gw = grad.data();
    double* gb = grad.data() + kc * d;

    double loss = 0.0;
    std::vector<double> z(kc);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x_std.row(i);
        for (std::size_t c = 0; c < kc; ++c) {
            double acc = b[c];
            const double* wc = w + c * d;
            for (std::size_t j = 0; j < d; ++j) acc += wc[j] * xi[j];
            z[c] = acc;
        }
        softmax_row(z.data(), kc);
        const auto yi = static_cast<std::size_t>(y[i]);
        loss -= std::log(std::max(z[yi], 1e-300));
        for (std::size_t c = 0; c < kc; ++c) {
            const double delta = z[c] - (c == yi ? 1.0 : 0.0);
            double* gwc = gw + c * d;
            for (std::size_t j = 0; j < d; ++j) gwc[j] += delta * xi[j];
            gb[c] += delta;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= inv_n;
    // L2 on weights only, biases unpenalized
    for (std::size_t i = 0; i < kc * d; ++i) {
        loss += 0.5 * l2 * w[i] * w[i];
        gw[i] += l2 * w[i];
    }
    return loss;
}

}  // namespace detail

Mat ProbeWeights::predict_proba(const Mat& x) const {
    if (x.cols != dim) throw ValidationError("probe weights: feature dimension mismatch");
    std::vector<std::size_t> rows(x.rows);
    std::iota(rows.begin(), rows.end(), 0);
    Standardizer s;
    s.mean = feat_mean;
    s.std = feat_std;
    const Mat x_std = s.apply(x, rows);
    std::vector<double> params = w;
    params.insert(params.end(), b.begin(), b.end());
    return forward_proba(x_std, params, n_classes);
}

std::vector<int> stratified_fold_assignment(std::span<const int> y, int folds, std::uint64_t seed) {
    const int k = class_count(y);
    std::vector<int> assignment(y.size(), -1);
    Rng rng(seed);
    for (int c = 0; c < k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == c) members.push_back(i);
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j)
            assignment[members[j]] = static_cast<int>((j + static_cast<std::size_t>(c)) % static_cast<std::size_t>(folds));
    }
    return assignment;
}

ProbeWeights fit_full(const Mat& x, std::span<const int> y, const ProbeSpec& spec) {
    validate_input(x, y, spec, false);
    const int k = std::max(2, class_count(y));
    std::vector<std::size_t> rows(x.rows);
    std::iota(rows.begin(), rows.end(), 0);
    const auto standardizer = Standardizer::fit(x, rows);
    const Mat x_std = standardizer.apply(x, rows);
    const auto params = optimize(x_std, y, k, spec);

    ProbeWeights pw;
    pw.n_classes = k;
    pw.dim = x.cols;
    pw.w.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * x.cols));
    pw.b.assign(params.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * x.cols), params.end());
    pw.feat_mean = standardizer.mean;
    pw.feat_std = standardizer.std;
    return pw;
}

ProbeResult train_probe(const Mat& x, std::span<const int> y, const ProbeSpec& spec) {
    validate_input(x, y, spec, true);
    const int k = std::max(2, class_count(y));
    const auto folds = stratified_fold_assignment(y, spec.folds, spec.seed);

    ProbeResult result;
    result.spec = spec;
    Mat oof(x.rows, static_cast<std::size_t>(k));  // pooled out-of-fold probabilities

    for (int f = 0; f < spec.folds; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < x.rows; ++i)
            (folds[i] == f ? test_rows : train_rows).push_back(i);
        const auto standardizer = Standardizer::fit(x, train_rows);
        const Mat x_train = standardizer.apply(x, train_rows);
        std::vector<int> y_train;
        for (auto r : train_rows) y_train.push_back(y[r]);
        const auto params = optimize(x_train, y_train, k, spec);

        const Mat x_test = standardizer.apply(x, test_rows);
        const Mat probs = forward_proba(x_test, params, k);
        std::vector<int> y_test;
        for (auto r : test_rows) y_test.push_back(y[r]);
        result.fold_aurocs.push_back(fold_auroc(probs, y_test, spec.task));
        for (std::size_t i = 0; i < test_rows.size(); ++i)
            for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c)
                oof.at(test_rows[i], c) = probs.at(i, c);
    }
    result.auroc_mean = stats::mean(result.fold_aurocs);

    // stratified bootstrap over stimuli with pooled out-of-fold scores
    std::vector<int> strata(y.begin(), y.end());
    auto statistic = [&](std::span<const std::size_t> idx) {
        if (spec.task == ProbeTask::binary_emotional_vs_neutral) {
            std::vector<double> s;
            std::vector<int> lab;
            for (auto i : idx) {
                s.push_back(oof.at(i, 1));
                lab.push_back(y[i]);
            }
            return stats::auroc(s, lab);
        }
        Mat p(idx.size(), static_cast<std::size_t>(k));
        std::vector<int> lab;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) p.at(i, c) = oof.at(idx[i], c);
            lab.push_back(y[idx[i]]);
        }
        return stats::macro_ovr_auroc(p, lab);
    };
    auto [lo, hi] = stats::bootstrap_ci(x.rows, strata, statistic,
                                        static_cast<std::size_t>(spec.bootstrap_resamples),
                                        derive_seed(spec.seed, 0x626f6f74));
    // the interval brackets the pooled statistic; extend minimally so it
    // also contains the fold-mean the result reports
    result.ci_low = std::min(lo, result.auroc_mean);
    result.ci_high = std::max(hi, result.auroc_mean);

    if (spec.retain_weights) result.weights = fit_full(x, y, spec);
    return result;
}

LayerSweep layer_sweep(const SweepData& data, const ProbeSpec& spec_template) {
    if (data.layer_count <= 0) throw ValidationError("layer sweep: no layers");
    LayerSweep sweep;
    for (int l = 0; l < data.layer_count; ++l) {
        ProbeSpec spec = spec_template;
        spec.layer = l;
        const Mat x = data.matrix(l);
        sweep.per_layer.push_back(train_probe(x, data.labels, spec));
    }
    sweep.peak_layer = 0;
    for (int l = 1; l < data.layer_count; ++l)
        if (sweep.per_layer[static_cast<std::size_t>(l)].auroc_mean >
            sweep.per_layer[static_cast<std::size_t>(sweep.peak_layer)].auroc_mean)
            sweep.peak_layer = l;  // strict: ties stay at the earliest layer
    sweep.normalized_depth = static_cast<double>(sweep.peak_layer) / static_cast<double>(data.n_layers);
    return sweep;
}

SweepData sweep_from_store(const ActivationStore& store, const Corpus& corpus, Stream stream) {
    SweepData data;
    data.layer_count = store.layer_count(stream);
    data.n_layers = store.n_layers();
    for (const auto& entry : store.manifest().entries) {
        const auto* stim = corpus.find(entry.id);
        if (!stim || !stim->emotion)
            throw ValidationError("store entry '" + entry.id + "' lacks an emotion label in the corpus");
        data.labels.push_back(static_cast<int>(*stim->emotion));
    }
    const ActivationStore* s = &store;
    data.matrix = [s, stream](int layer) { return store_matrix(*s, stream, layer); };
    return data;
}

SweepData binary_sweep_data(const ActivationStore& emotional, const ActivationStore& neutral, Stream stream) {
    if (emotional.manifest().model_fingerprint != neutral.manifest().model_fingerprint)
        throw ValidationError("binary probe: stores come from different models");
    SweepData data;
    data.layer_count = emotional.layer_count(stream);
    data.n_layers = emotional.n_layers();
    data.labels.assign(emotional.size(), 1);
    data.labels.insert(data.labels.end(), neutral.size(), 0);
    const ActivationStore* pos = &emotional;
    const ActivationStore* neg = &neutral;
    data.matrix = [pos, neg, stream](int layer) {
        const Mat a = store_matrix(*pos, stream, layer);
        const Mat b = store_matrix(*neg, stream, layer);
        Mat out(a.rows + b.rows, a.cols);
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
        return out;
    };
    return data;
}

double transfer_auroc(const Mat& x_train, std::span<const int> y_train, const Mat& x_test,
                      std::span<const int> y_test, const ProbeSpec& spec) {
    if (x_train.cols != x_test.cols) throw ValidationError("transfer: feature dimensions disagree");
    if (class_count(y_train) != class_count(y_test))
        throw ValidationError("transfer: label spaces disagree");
    const auto probe = fit_full(x_train, y_train, spec);
    const Mat probs = probe.predict_proba(x_test);
    return fold_auroc(probs, y_test, spec.task);
}

DissociationReport dissociation_report(const LayerSweep& binary, const LayerSweep& eight_class) {
    if (binary.per_layer.size() != eight_class.per_layer.size())
        throw ValidationError("dissociation: sweeps cover different layer sets");
    DissociationReport rep;
    rep.layer = binary.peak_layer;
    rep.binary_auroc = binary.per_layer[static_cast<std::size_t>(binary.peak_layer)].auroc_mean;
    rep.eight_class_auroc = eight_class.per_layer[static_cast<std::size_t>(binary.peak_layer)].auroc_mean;
    rep.gap_pp = (rep.binary_auroc - rep.eight_class_auroc) * 100.0;
    return rep;
}

FrozenScoreSummary frozen_score(const ProbeWeights& probe, const Mat& x) {
    if (probe.n_classes != 2) throw ValidationError("frozen_score: needs a binary probe");
    const Mat probs = probe.predict_proba(x);
    FrozenScoreSummary s;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const double p = probs.at(i, 1);
        s.p_emotional.push_back(p);
        if (p > 0.5) ++s.above_05;
        if (p > 0.8) ++s.above_08;
    }
    s.mean = stats::mean(s.p_emotional);
    auto sorted = s.p_emotional;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return s;
}

}  // namespace emolab::probing
