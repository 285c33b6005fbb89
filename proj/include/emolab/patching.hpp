#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emolab/corpus.hpp"
#include "emolab/model.hpp"
#include "emolab/store.hpp"

namespace emolab::patching {

enum class PairCondition { within_set, cross_same, cross_diff };

std::string_view to_string(PairCondition c);

struct PatchPair {
    std::string source_id;
    std::string target_id;
    Emotion source_emotion = Emotion::ecstasy;
    Emotion target_emotion = Emotion::ecstasy;
    PairCondition condition = PairCondition::within_set;
    int layer = 0;
    Stream stream = Stream::residual;
};

struct PatchOutcome {
    PatchPair pair;
    Emotion baseline_label = Emotion::ecstasy;
    Emotion patched_label = Emotion::ecstasy;
    bool source_shift_success = false;    // patched prediction equals the source emotion
    bool target_correct_success = false;  // patched prediction equals the target's own emotion
};

enum class SuccessMetric { source_shift, target_correct };

std::string_view to_string(SuccessMetric m);

// chance rate for Cohen's h, fixed at the 8-class baseline
inline constexpr double kChanceRate = 0.125;

struct PatchSummary {
    PairCondition condition = PairCondition::within_set;
    int layer = 0;
    SuccessMetric metric = SuccessMetric::source_shift;
    int n = 0;
    int successes = 0;
    double success_rate = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 0.0;
    double cohens_h_vs_chance = 0.0;
};

// Seeded uniform sampling without replacement over the admissible pairs:
// within_set needs one corpus (emotions differ), the cross conditions
// need two (sets differ; emotions equal for cross_same, different for
// cross_diff). Throws ValidationError when fewer than n pairs exist.
std::vector<PatchPair> generate_pairs(const Corpus& source, const Corpus& target, PairCondition condition,
                                      int n, std::uint64_t seed, int layer, Stream stream = Stream::residual);

struct PatchExperimentResult {
    std::vector<PatchOutcome> outcomes;
    std::vector<PatchSummary> summaries;  // per (condition, layer) x metric
    int forward_passes = 0;               // baselines are cached per unique target
};

// One cached baseline pass per distinct target plus one patched pass per
// pair; the patch copies the source's stored stream vector into the
// target's forward pass at the target's extraction position.
PatchExperimentResult run_patch_experiment(const Model& model, const ActivationStore& source_store,
                                           const Corpus& target_corpus, const PromptTemplate& tpl,
                                           std::span<const PatchPair> pairs, int threads = 1);

std::vector<PatchSummary> summarize(std::span<const PatchOutcome> outcomes);

}  // namespace emolab::patching
