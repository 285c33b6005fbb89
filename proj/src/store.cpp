#include "emolab/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>

#include "emolab/errors.hpp"

namespace emolab {

namespace {

using nlohmann::json;

std::string stream_file(Stream s, int layer) {
    std::string code(stream_code(s));
    return code + (layer < 10 ? "_0" : "_") + std::to_string(layer) + ".f32";
}

std::vector<float> read_floats(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) throw ParseError("cannot open store file: " + p.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(float) != 0) throw ParseError("store file not float-aligned: " + p.string());
    std::vector<float> out(raw.size() / sizeof(float));
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

void append_floats(const std::filesystem::path& p, std::span<const float> data) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out.good()) throw ParseError("cannot append to store file: " + p.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
}

json manifest_to_json(const StoreManifest& m) {
    json j;
    j["model_fingerprint"] = m.model_fingerprint;
    j["corpus_hash"] = m.corpus_hash;
    j["template_hash"] = m.template_hash;
    j["n_layers"] = m.n_layers;
    j["d_model"] = m.d_model;
    j["n_heads"] = m.n_heads;
    j["has_attention"] = m.has_attention;
    j["entries"] = json::array();
    for (const auto& e : m.entries)
        j["entries"].push_back({{"id", e.id}, {"n_tokens", e.n_tokens}, {"predicted", e.predicted}});
    return j;
}

StoreManifest manifest_from_json(const json& j) {
    StoreManifest m;
    m.model_fingerprint = j.at("model_fingerprint");
    m.corpus_hash = j.at("corpus_hash");
    m.template_hash = j.at("template_hash");
    m.n_layers = j.at("n_layers");
    m.d_model = j.at("d_model");
    m.n_heads = j.at("n_heads");
    m.has_attention = j.at("has_attention");
    for (const auto& e : j.at("entries"))
        m.entries.push_back({e.at("id"), e.at("n_tokens"), e.at("predicted")});
    return m;
}

void write_manifest(const std::filesystem::path& dir, const StoreManifest& m) {
    std::ofstream out(dir / "manifest.json");
    if (!out.good()) throw ParseError("cannot write store manifest in " + dir.string());
    out << manifest_to_json(m).dump(1) << "\n";
}

std::size_t attention_floats_per_stimulus(const StoreManifest& m, int n_tokens) {
    return static_cast<std::size_t>(m.n_layers) * static_cast<std::size_t>(m.n_heads) *
           static_cast<std::size_t>(n_tokens);
}

}  // namespace

std::optional<std::size_t> ActivationStore::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < manifest_.entries.size(); ++i)
        if (manifest_.entries[i].id == id) return i;
    return std::nullopt;
}

std::span<const float> ActivationStore::row(Stream stream, int layer, std::size_t index) const {
    const auto& layers = streams_[static_cast<std::size_t>(stream)];
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size())
        throw ValidationError("store: layer out of range for stream " + std::string(stream_code(stream)));
    const auto d = static_cast<std::size_t>(manifest_.d_model);
    return {layers[static_cast<std::size_t>(layer)].data() + index * d, d};
}

std::span<const float> ActivationStore::attention_row(std::size_t index, int layer, int head) const {
    if (!manifest_.has_attention) throw ValidationError("store: attention was not captured");
    const auto n_tok = static_cast<std::size_t>(manifest_.entries[index].n_tokens);
    const std::size_t base = attention_offsets_[index];
    const std::size_t per_layer = static_cast<std::size_t>(manifest_.n_heads) * n_tok;
    return {attention_.data() + base + static_cast<std::size_t>(layer) * per_layer +
                static_cast<std::size_t>(head) * n_tok,
            n_tok};
}

void ActivationStore::load_data() {
    const auto n = manifest_.entries.size();
    const auto d = static_cast<std::size_t>(manifest_.d_model);
    streams_.assign(3, {});
    for (Stream s : kAllStreams) {
        auto& layers = streams_[static_cast<std::size_t>(s)];
        layers.resize(static_cast<std::size_t>(layer_count(s)));
        for (int l = 0; l < layer_count(s); ++l) {
            auto data = read_floats(dir_ / stream_file(s, l));
            if (data.size() != n * d)
                throw ParseError("store file " + stream_file(s, l) + " has wrong row count");
            layers[static_cast<std::size_t>(l)] = std::move(data);
        }
    }
    if (manifest_.has_attention) {
        attention_ = read_floats(dir_ / "attention.f32");
        attention_offsets_.clear();
        std::size_t off = 0;
        for (const auto& e : manifest_.entries) {
            attention_offsets_.push_back(off);
            off += attention_floats_per_stimulus(manifest_, e.n_tokens);
        }
        if (attention_.size() != off) throw ParseError("store attention blob has wrong size");
    }
}

ActivationStore ActivationStore::open(const std::filesystem::path& dir) {
    const auto mpath = dir / "manifest.json";
    std::ifstream in(mpath);
    if (!in.good())
        throw ValidationError("no activation store at " + dir.string() + " (run `extract` first)");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(mpath.string() + ": " + e.what());
    }
    ActivationStore store;
    store.dir_ = dir;
    store.manifest_ = manifest_from_json(j);
    store.load_data();
    return store;
}

ActivationStore extract_corpus(const Model& model, const Corpus& corpus, const PromptTemplate& tpl,
                               const std::filesystem::path& dir, const ExtractOptions& options) {
    std::filesystem::create_directories(dir);
    const ByteTokenizer tok;
    const auto readout = LabelReadout::from_labels(tpl.labels, tok);

    StoreManifest manifest;
    manifest.model_fingerprint = hex64(model.fingerprint());
    manifest.corpus_hash = hex64(corpus.content_hash());
    manifest.template_hash = hex64(template_hash(tpl));
    manifest.n_layers = model.config().n_layers;
    manifest.d_model = model.config().d_model;
    manifest.n_heads = model.config().n_heads;
    manifest.has_attention = options.capture_attention;

    const auto mpath = dir / "manifest.json";
    if (std::filesystem::exists(mpath)) {
        std::ifstream in(mpath);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError(mpath.string() + ": " + e.what());
        }
        auto existing = manifest_from_json(j);
        if (existing.model_fingerprint != manifest.model_fingerprint ||
            existing.corpus_hash != manifest.corpus_hash ||
            existing.template_hash != manifest.template_hash ||
            existing.has_attention != manifest.has_attention)
            throw ValidationError("store at " + dir.string() +
                                  " was extracted with a different model/corpus/template; refusing to resume");
        manifest.entries = std::move(existing.entries);
    } else {
        // fresh store: clear any stale data files
        for (Stream s : kAllStreams)
            for (int l = 0; l <= model.config().n_layers; ++l)
                std::filesystem::remove(dir / stream_file(s, l));
        std::filesystem::remove(dir / "attention.f32");
    }

    // trim partially written rows from an interrupted run
    const auto n_done = manifest.entries.size();
    const auto d = static_cast<std::size_t>(manifest.d_model);
    auto trim = [&](const std::filesystem::path& p, std::size_t expect_bytes) {
        if (!std::filesystem::exists(p)) {
            if (expect_bytes > 0) throw ParseError("store file missing during resume: " + p.string());
            return;
        }
        const auto size = std::filesystem::file_size(p);
        if (size < expect_bytes) throw ParseError("store file truncated below manifest: " + p.string());
        if (size > expect_bytes) std::filesystem::resize_file(p, expect_bytes);
    };
    for (Stream s : kAllStreams) {
        const int count = s == Stream::residual ? manifest.n_layers + 1 : manifest.n_layers;
        for (int l = 0; l < count; ++l)
            trim(dir / stream_file(s, l), n_done * d * sizeof(float));
    }
    if (options.capture_attention) {
        std::size_t att = 0;
        for (const auto& e : manifest.entries) att += attention_floats_per_stimulus(manifest, e.n_tokens);
        trim(dir / "attention.f32", att * sizeof(float));
    }

    std::set<std::string> done;
    for (const auto& e : manifest.entries) done.insert(e.id);
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (!done.count(corpus.stimuli[i].id)) missing.push_back(i);

    ForwardOptions fopt = ForwardOptions::all_streams();
    fopt.capture_attention = options.capture_attention;

    const std::size_t chunk = std::max<std::size_t>(8, static_cast<std::size_t>(options.threads) * 4);
    std::size_t processed = 0;
    for (std::size_t begin = 0; begin < missing.size(); begin += chunk) {
        const std::size_t end = std::min(missing.size(), begin + chunk);
        std::vector<ForwardResult> results(end - begin);
        std::vector<int> n_tokens(end - begin);
        parallel_for(end - begin, options.threads, [&](std::size_t k) {
            const auto& stim = corpus.stimuli[missing[begin + k]];
            const auto prompt = render_prompt(tpl, stim);
            const auto tokens = tok.encode(prompt);
            const int extraction = find_extraction_index(tokens);
            if (extraction < 0) throw ValidationError("prompt for '" + stim.id + "' has no marker colon");
            results[k] = model.forward(tokens, extraction, {}, fopt);
            n_tokens[k] = static_cast<int>(tokens.size());
        });
        // persist in corpus order, one stimulus at a time
        for (std::size_t k = 0; k < results.size(); ++k) {
            const auto& stim = corpus.stimuli[missing[begin + k]];
            const auto& r = results[k];
            for (int l = 0; l <= manifest.n_layers; ++l)
                append_floats(dir / stream_file(Stream::residual, l), r.residual[static_cast<std::size_t>(l)]);
            for (int l = 0; l < manifest.n_layers; ++l) {
                append_floats(dir / stream_file(Stream::attn_out, l), r.attn_out[static_cast<std::size_t>(l)]);
                append_floats(dir / stream_file(Stream::ffn_out, l), r.ffn_out[static_cast<std::size_t>(l)]);
            }
            if (options.capture_attention) {
                std::vector<float> flat;
                flat.reserve(attention_floats_per_stimulus(manifest, n_tokens[k]));
                for (const auto& layer : r.attention)
                    for (const auto& head : layer) {
                        flat.insert(flat.end(), head.begin(), head.end());
                        // pad to n_tokens (rows at the final position already have full length)
                        flat.resize(flat.size() + (static_cast<std::size_t>(n_tokens[k]) - head.size()), 0.0f);
                    }
                append_floats(dir / "attention.f32", flat);
            }
            StoreEntry entry;
            entry.id = stim.id;
            entry.n_tokens = n_tokens[k];
            entry.predicted = std::string(to_string(classify(r, readout)));
            manifest.entries.push_back(std::move(entry));
        }
        write_manifest(dir, manifest);
        processed += results.size();
        if (options.progress) options.progress(processed, missing.size());
    }
    if (!std::filesystem::exists(mpath)) write_manifest(dir, manifest);

    return ActivationStore::open(dir);
}

std::uint64_t store_content_hash(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& f : files) {
        h = fnv1a(f.filename().string(), h);
        std::ifstream in(f, std::ios::binary);
        std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        h = fnv1a(raw.data(), raw.size(), h);
    }
    return h;
}

Mat store_matrix(const ActivationStore& store, Stream stream, int layer) {
    Mat m(store.size(), static_cast<std::size_t>(store.d_model()));
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto r = store.row(stream, layer, i);
        for (std::size_t j = 0; j < r.size(); ++j) m.at(i, j) = static_cast<double>(r[j]);
    }
    return m;
}

}  // namespace emolab
