#include "emolab/knockout.hpp"

#include <atomic>

#include "emolab/errors.hpp"
#include "emolab/rng.hpp"
#include "emolab/tokenizer.hpp"
#include "emolab/util.hpp"

namespace emolab::knockout {

std::string_view to_string(AblationKind k) { return k == AblationKind::zero ? "zero" : "noise"; }

double corpus_accuracy(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                       const std::function<std::vector<Intervention>(std::size_t)>& interventions_for,
                       int threads) {
    const ByteTokenizer tok;
    const auto readout = LabelReadout::from_labels(tpl.labels, tok);
    std::vector<int> correct(corpus.size(), 0);
    std::size_t labeled = 0;
    for (const auto& s : corpus.stimuli) labeled += s.emotion.has_value();
    if (labeled == 0) throw ValidationError("corpus_accuracy: corpus has no gold emotion labels");

    parallel_for(corpus.size(), threads, [&](std::size_t i) {
        const auto& stim = corpus.stimuli[i];
        if (!stim.emotion) return;
        const auto prompt = render_prompt(tpl, stim);
        const auto tokens = tok.encode(prompt);
        const int extraction = find_extraction_index(tokens);
        const auto ivs = interventions_for(i);
        const auto result = model.forward(tokens, extraction, ivs);
        correct[i] = classify(result, readout) == *stim.emotion ? 1 : 0;
    });
    std::size_t hits = 0;
    for (int c : correct) hits += static_cast<std::size_t>(c);
    return static_cast<double>(hits) / static_cast<double>(labeled);
}

double corpus_accuracy(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                       std::span<const Intervention> interventions, int threads) {
    std::vector<Intervention> fixed(interventions.begin(), interventions.end());
    return corpus_accuracy(model, corpus, tpl, [&fixed](std::size_t) { return fixed; }, threads);
}

KnockoutSweep knockout_sweep(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                             Sublayer sublayer, AblationKind ablation, std::uint64_t seed,
                             double threshold_pp, int threads) {
    if (sublayer == Sublayer::residual)
        throw ValidationError("knockout_sweep: sublayer must be mhsa or ffn");

    KnockoutSweep sweep;
    sweep.threshold_pp = threshold_pp;
    sweep.baseline_acc = corpus_accuracy(model, corpus, tpl, std::span<const Intervention>{}, threads);

    for (int layer = 0; layer < model.config().n_layers; ++layer) {
        auto provider = [&, layer](std::size_t stimulus_index) {
            Intervention iv;
            iv.kind = ablation == AblationKind::zero ? InterventionKind::zero_ablate
                                                     : InterventionKind::noise_ablate;
            iv.layer = layer;
            iv.sublayer = sublayer;
            if (ablation == AblationKind::noise)
                iv.noise_seed = derive_seed(seed, static_cast<std::uint64_t>(layer) * 100003ull +
                                                      static_cast<std::uint64_t>(stimulus_index));
            return std::vector<Intervention>{iv};
        };
        KnockoutResult r;
        r.layer = layer;
        r.sublayer = sublayer;
        r.ablation = ablation;
        r.baseline_acc = sweep.baseline_acc;
        r.ablated_acc = corpus_accuracy(model, corpus, tpl, provider, threads);
        r.drop = (r.baseline_acc - r.ablated_acc) * 100.0;
        r.critical = r.drop > threshold_pp;
        sweep.critical_count += r.critical;
        sweep.results.push_back(r);
    }
    return sweep;
}

CriticalSummary critical_summary(std::span<const LabeledSweep> sweeps) {
    CriticalSummary summary;
    for (const auto& ls : sweeps) {
        summary.cells.push_back({ls.corpus_label, ls.sublayer, ls.sweep.critical_count});
        for (const auto& r : ls.sweep.results)
            summary.drop_matrix.push_back({ls.corpus_label, ls.sublayer, r.layer, r.drop});
    }
    return summary;
}

}  // namespace emolab::knockout
