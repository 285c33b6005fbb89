#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emolab/corpus.hpp"
#include "emolab/tokenizer.hpp"

namespace emolab {

// The three per-layer activation streams probes read. Wire codes: the
// residual stream is "h", attention output "a", feed-forward output "m".
enum class Stream { residual, attn_out, ffn_out };

std::string_view stream_code(Stream s);
std::optional<Stream> stream_from_code(std::string_view code);
constexpr std::array<Stream, 3> kAllStreams = {Stream::residual, Stream::attn_out, Stream::ffn_out};

struct ModelConfig {
    int n_layers = 4;
    int d_model = 64;
    int n_heads = 4;
    int d_ff = 128;
    int vocab_size = ByteTokenizer::kVocab;
    int max_seq = 640;
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError
};

struct BlockWeights {
    std::vector<float> ln1_g, ln1_b;
    std::vector<float> wq, wk, wv, wo;  // [d, d] row-major, rows are outputs
    std::vector<float> bq, bk, bv, bo;
    std::vector<float> ln2_g, ln2_b;
    std::vector<float> w1, b1;  // [d_ff, d], [d_ff]
    std::vector<float> w2, b2;  // [d, d_ff], [d]
};

struct Weights {
    std::vector<float> tok_emb;  // [vocab, d]
    std::vector<float> pos_emb;  // [max_seq, d]
    std::vector<BlockWeights> blocks;
    std::vector<float> lnf_g, lnf_b;
    std::vector<float> unembed;  // [vocab, d]
};

enum class InterventionKind { patch, zero_ablate, noise_ablate };
enum class Sublayer { mhsa, ffn, residual };

std::string_view to_string(Sublayer s);
std::string_view to_string(InterventionKind k);

// One mid-pass edit. A patch replaces the stream vector at a single
// (layer, sublayer, position) before it joins the residual; ablations
// replace the sublayer output at every position of that layer. For
// sublayer == residual the layer index names the stream state entering
// block `layer` (layer 0 is the embedding output), matching the h-stream
// layer indexing of the activation store.
struct Intervention {
    InterventionKind kind = InterventionKind::patch;
    int layer = 0;
    Sublayer sublayer = Sublayer::residual;
    int position = -1;                   // required for patch
    std::vector<float> payload;          // required for patch, length d_model
    std::optional<std::uint64_t> noise_seed;  // required for noise_ablate
};

struct ForwardOptions {
    bool capture_residual = false;
    bool capture_attn_out = false;
    bool capture_ffn_out = false;
    bool capture_attention = false;

    static ForwardOptions all_streams() { return {true, true, true, false}; }
};

struct ForwardResult {
    std::vector<float> logits;  // full vocab, at the extraction position
    int argmax_token = -1;
    // residual[l], l in [0, n_layers]; attn_out[b]/ffn_out[b], b in [0, n_layers)
    std::vector<std::vector<float>> residual, attn_out, ffn_out;
    // attention[b][head] = softmax row at the extraction position
    std::vector<std::vector<std::vector<float>>> attention;
};

class Model {
public:
    static Model seeded(const ModelConfig& config);
    static Model load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;

    const ModelConfig& config() const { return config_; }
    Weights& weights() { return weights_; }
    const Weights& weights() const { return weights_; }

    // Covers the architecture and the exact weight contents; stores and
    // probes use it to refuse mismatched inputs.
    std::uint64_t fingerprint() const;

    // Re-check invariants after direct weight edits (tests build toy
    // models that way).
    void revalidate();

    ForwardResult forward(std::span<const int> tokens, int extraction_index,
                          std::span<const Intervention> interventions = {},
                          const ForwardOptions& options = {}) const;

private:
    Model(ModelConfig config, Weights weights);

    ModelConfig config_;
    Weights weights_;
    std::uint64_t weights_hash_ = 0;
};

// First-token logit readout over the template's eight label strings.
struct LabelReadout {
    std::array<int, 8> first_token{};

    static LabelReadout from_labels(const std::array<std::string, 8>& labels, const ByteTokenizer& tok);
};

std::array<float, 8> label_logits(const ForwardResult& result, const LabelReadout& readout);

// argmax over the eight label logits; exact ties resolve to the lower
// emotion code.
Emotion classify(const ForwardResult& result, const LabelReadout& readout);

}  // namespace emolab
