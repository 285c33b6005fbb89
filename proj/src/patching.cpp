#include "emolab/patching.hpp"

#include <algorithm>
#include <map>

#include "emolab/errors.hpp"
#include "emolab/rng.hpp"
#include "emolab/stats.hpp"
#include "emolab/tokenizer.hpp"
#include "emolab/util.hpp"

namespace emolab::patching {

std::string_view to_string(PairCondition c) {
    switch (c) {
        case PairCondition::within_set: return "within_set";
        case PairCondition::cross_same: return "cross_same";
        case PairCondition::cross_diff: return "cross_diff";
    }
    return "?";
}

std::string_view to_string(SuccessMetric m) {
    return m == SuccessMetric::source_shift ? "source_shift" : "target_correct";
}

std::vector<PatchPair> generate_pairs(const Corpus& source, const Corpus& target, PairCondition condition,
                                      int n, std::uint64_t seed, int layer, Stream stream) {
    std::vector<PatchPair> candidates;
    for (const auto& s : source.stimuli) {
        if (!s.emotion) continue;
        for (const auto& t : target.stimuli) {
            if (!t.emotion) continue;
            const bool same_set = s.set_tag == t.set_tag;
            const bool same_emotion = *s.emotion == *t.emotion;
            bool ok = false;
            switch (condition) {
                case PairCondition::within_set: ok = same_set && !same_emotion && s.id != t.id; break;
                case PairCondition::cross_same: ok = !same_set && same_emotion; break;
                case PairCondition::cross_diff: ok = !same_set && !same_emotion; break;
            }
            if (!ok) continue;
            PatchPair p;
            p.source_id = s.id;
            p.target_id = t.id;
            p.source_emotion = *s.emotion;
            p.target_emotion = *t.emotion;
            p.condition = condition;
            p.layer = layer;
            p.stream = stream;
            candidates.push_back(std::move(p));
        }
    }
    if (static_cast<int>(candidates.size()) < n)
        throw ValidationError("generate_pairs: condition " + std::string(to_string(condition)) +
                              " admits only " + std::to_string(candidates.size()) + " pairs, " +
                              std::to_string(n) + " requested");
    Rng rng(seed);
    rng.shuffle(candidates);
    candidates.resize(static_cast<std::size_t>(n));
    return candidates;
}

PatchExperimentResult run_patch_experiment(const Model& model, const ActivationStore& source_store,
                                           const Corpus& target_corpus, const PromptTemplate& tpl,
                                           std::span<const PatchPair> pairs, int threads) {
    const ByteTokenizer tok;
    const auto readout = LabelReadout::from_labels(tpl.labels, tok);
    PatchExperimentResult result;

    // one baseline per distinct target
    std::vector<std::string> target_ids;
    for (const auto& p : pairs)
        if (std::find(target_ids.begin(), target_ids.end(), p.target_id) == target_ids.end())
            target_ids.push_back(p.target_id);

    struct TargetRun {
        std::vector<int> tokens;
        int extraction = -1;
        Emotion baseline = Emotion::ecstasy;
    };
    std::map<std::string, TargetRun> targets;
    for (const auto& id : target_ids) targets[id] = {};
    std::vector<TargetRun> runs(target_ids.size());
    parallel_for(target_ids.size(), threads, [&](std::size_t i) {
        const auto* stim = target_corpus.find(target_ids[i]);
        if (!stim) throw ValidationError("patch target '" + target_ids[i] + "' not in target corpus");
        TargetRun run;
        const auto prompt = render_prompt(tpl, *stim);
        run.tokens = tok.encode(prompt);
        run.extraction = find_extraction_index(run.tokens);
        run.baseline = classify(model.forward(run.tokens, run.extraction), readout);
        runs[i] = std::move(run);
    });
    for (std::size_t i = 0; i < target_ids.size(); ++i) targets[target_ids[i]] = std::move(runs[i]);
    result.forward_passes += static_cast<int>(target_ids.size());

    result.outcomes.resize(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const auto& pair = pairs[i];
        const auto source_index = source_store.index_of(pair.source_id);
        if (!source_index)
            throw ValidationError("patch source '" + pair.source_id + "' missing from activation store");
        const auto& target = targets.at(pair.target_id);

        Intervention iv;
        iv.kind = InterventionKind::patch;
        iv.layer = pair.layer;
        iv.sublayer = pair.stream == Stream::residual
                          ? Sublayer::residual
                          : (pair.stream == Stream::attn_out ? Sublayer::mhsa : Sublayer::ffn);
        iv.position = target.extraction;
        const auto row = source_store.row(pair.stream, pair.layer, *source_index);
        iv.payload.assign(row.begin(), row.end());

        PatchOutcome out;
        out.pair = pair;
        out.baseline_label = target.baseline;
        out.patched_label = classify(model.forward(target.tokens, target.extraction, std::span(&iv, 1)), readout);
        out.source_shift_success = out.patched_label == pair.source_emotion;
        out.target_correct_success = out.patched_label == pair.target_emotion;
        result.outcomes[i] = std::move(out);
    });
    result.forward_passes += static_cast<int>(pairs.size());

    result.summaries = summarize(result.outcomes);
    return result;
}

std::vector<PatchSummary> summarize(std::span<const PatchOutcome> outcomes) {
    std::map<std::pair<PairCondition, int>, std::vector<const PatchOutcome*>> groups;
    for (const auto& o : outcomes) groups[{o.pair.condition, o.pair.layer}].push_back(&o);

    std::vector<PatchSummary> summaries;
    for (const auto& [key, members] : groups) {
        for (SuccessMetric metric : {SuccessMetric::source_shift, SuccessMetric::target_correct}) {
            PatchSummary s;
            s.condition = key.first;
            s.layer = key.second;
            s.metric = metric;
            s.n = static_cast<int>(members.size());
            for (const auto* o : members)
                s.successes +=
                    metric == SuccessMetric::source_shift ? o->source_shift_success : o->target_correct_success;
            s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.n);
            const auto [lo, hi] = stats::wilson_interval(s.successes, s.n, 0.95);
            s.wilson_low = lo;
            s.wilson_high = hi;
            s.cohens_h_vs_chance = stats::cohens_h(s.success_rate, kChanceRate);
            summaries.push_back(s);
        }
    }
    return summaries;
}

}  // namespace emolab::patching
