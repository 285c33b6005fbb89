#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emolab/corpus.hpp"
#include "emolab/model.hpp"
#include "emolab/util.hpp"

namespace emolab {

// On disk: one row-major binary file per (stream, layer) with one row
// per stimulus, a flat attention blob, and a JSON manifest binding the
// rows to model fingerprint, corpus hash, template hash and id order.
struct StoreEntry {
    std::string id;
    int n_tokens = 0;
    std::string predicted;
};

struct StoreManifest {
    std::string model_fingerprint;
    std::string corpus_hash;
    std::string template_hash;
    int n_layers = 0;
    int d_model = 0;
    int n_heads = 0;
    bool has_attention = false;
    std::vector<StoreEntry> entries;
};

class ActivationStore {
public:
    static ActivationStore open(const std::filesystem::path& dir);

    const StoreManifest& manifest() const { return manifest_; }
    const std::filesystem::path& dir() const { return dir_; }
    std::size_t size() const { return manifest_.entries.size(); }
    int n_layers() const { return manifest_.n_layers; }
    int d_model() const { return manifest_.d_model; }
    bool has_attention() const { return manifest_.has_attention; }

    std::optional<std::size_t> index_of(std::string_view id) const;
    std::span<const float> row(Stream stream, int layer, std::size_t index) const;
    int n_tokens(std::size_t index) const { return manifest_.entries[index].n_tokens; }
    // softmax row at the extraction position; length == n_tokens(index)
    std::span<const float> attention_row(std::size_t index, int layer, int head) const;

    // layers available for a stream: residual 0..n_layers, others 0..n_layers-1
    int layer_count(Stream stream) const {
        return stream == Stream::residual ? manifest_.n_layers + 1 : manifest_.n_layers;
    }

private:
    std::filesystem::path dir_;
    StoreManifest manifest_;
    // streams[stream][layer] = flat n x d
    std::vector<std::vector<std::vector<float>>> streams_;
    std::vector<float> attention_;
    std::vector<std::size_t> attention_offsets_;  // per stimulus

    void load_data();
};

struct ExtractOptions {
    bool capture_attention = true;
    int threads = 1;
    // called after each persisted chunk; tests use it to simulate interruption
    std::function<void(std::size_t done, std::size_t total)> progress;
};

// Runs one captured forward pass per stimulus and persists the store.
// Resumable: stimuli already recorded in the manifest are skipped, and a
// rerun on a complete store does no forward passes. Throws
// ValidationError if an existing manifest disagrees on model, corpus or
// template.
ActivationStore extract_corpus(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                               const std::filesystem::path& dir, const ExtractOptions& options = {});

// hash of the manifest plus all data files; used by determinism checks
std::uint64_t store_content_hash(const std::filesystem::path& dir);

// n x d double matrix of one (stream, layer) slice
Mat store_matrix(const ActivationStore& store, Stream stream, int layer);

}  // namespace emolab
