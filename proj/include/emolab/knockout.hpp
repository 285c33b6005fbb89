#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emolab/corpus.hpp"
#include "emolab/model.hpp"

namespace emolab::knockout {

enum class AblationKind { zero, noise };

std::string_view to_string(AblationKind k);

struct KnockoutResult {
    int layer = 0;
    Sublayer sublayer = Sublayer::mhsa;
    AblationKind ablation = AblationKind::zero;
    double baseline_acc = 0.0;
    double ablated_acc = 0.0;
    double drop = 0.0;  // percentage points
    bool critical = false;
};

struct KnockoutSweep {
    double baseline_acc = 0.0;
    double threshold_pp = 20.0;
    std::vector<KnockoutResult> results;
    int critical_count = 0;
};

// Fraction of stimuli whose classification matches their gold emotion;
// the provider returns the interventions for each stimulus index.
double corpus_accuracy(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                       const std::function<std::vector<Intervention>(std::size_t)>& interventions_for,
                       int threads = 1);

double corpus_accuracy(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                       std::span<const Intervention> interventions = {}, int threads = 1);

// One full-corpus evaluation per layer with the sublayer ablated; the
// baseline is computed once per sweep. Noise seeds derive from the sweep
// seed, the layer and the stimulus index.
KnockoutSweep knockout_sweep(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                             Sublayer sublayer, AblationKind ablation, std::uint64_t seed,
                             double threshold_pp = 20.0, int threads = 1);

struct LabeledSweep {
    std::string corpus_label;
    Sublayer sublayer = Sublayer::mhsa;
    KnockoutSweep sweep;
};

struct CriticalCell {
    std::string corpus_label;
    Sublayer sublayer = Sublayer::mhsa;
    int critical_count = 0;
};

struct DropRow {
    std::string corpus_label;
    Sublayer sublayer = Sublayer::mhsa;
    int layer = 0;
    double drop = 0.0;
};

struct CriticalSummary {
    std::vector<CriticalCell> cells;
    std::vector<DropRow> drop_matrix;  // consumed by external heatmap plotting
};

CriticalSummary critical_summary(std::span<const LabeledSweep> sweeps);

}  // namespace emolab::knockout
