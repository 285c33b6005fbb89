#include "emolab/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>

#include "emolab/errors.hpp"
#include "emolab/kernels.hpp"
#include "emolab/rng.hpp"
#include "emolab/util.hpp"

namespace emolab {

namespace {

using nlohmann::json;

constexpr float kLnEps = 1e-5f;

void layer_norm(const float* x, const float* g, const float* b, float* y, std::size_t d) {
    const float mean = kernels::sum(x, d) / static_cast<float>(d);
    const float var = kernels::sq_diff_sum(x, mean, d) / static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + kLnEps);
    for (std::size_t i = 0; i < d; ++i) y[i] = (x[i] - mean) * inv * g[i] + b[i];
}

// y[o] = dot(x, W.row(o)) + bias[o]; W is [out, in] row-major
void linear(const float* x, const float* w, const float* bias, float* y, std::size_t in, std::size_t out) {
    for (std::size_t o = 0; o < out; ++o) y[o] = kernels::dot(x, w + o * in, in) + bias[o];
}

void fill_uniform(std::vector<float>& v, Rng& rng, float scale) {
    for (auto& x : v) x = scale * (2.0f * rng.uniform_f32() - 1.0f);
}

}  // namespace

std::string_view stream_code(Stream s) {
    switch (s) {
        case Stream::residual: return "h";
        case Stream::attn_out: return "a";
        case Stream::ffn_out: return "m";
    }
    return "?";
}

std::optional<Stream> stream_from_code(std::string_view code) {
    if (code == "h") return Stream::residual;
    if (code == "a") return Stream::attn_out;
    if (code == "m") return Stream::ffn_out;
    return std::nullopt;
}

std::string_view to_string(Sublayer s) {
    switch (s) {
        case Sublayer::mhsa: return "mhsa";
        case Sublayer::ffn: return "ffn";
        case Sublayer::residual: return "residual";
    }
    return "?";
}

std::string_view to_string(InterventionKind k) {
    switch (k) {
        case InterventionKind::patch: return "patch";
        case InterventionKind::zero_ablate: return "zero_ablate";
        case InterventionKind::noise_ablate: return "noise_ablate";
    }
    return "?";
}

void ModelConfig::validate() const {
    if (n_layers < 1) throw ValidationError("model config: n_layers must be >= 1");
    if (d_model < 8) throw ValidationError("model config: d_model must be >= 8");
    if (n_heads < 1 || d_model % n_heads != 0)
        throw ValidationError("model config: n_heads must divide d_model");
    if (d_ff < 1) throw ValidationError("model config: d_ff must be >= 1");
    if (vocab_size < ByteTokenizer::kVocab)
        throw ValidationError("model config: vocab_size must cover the byte tokenizer");
    if (max_seq < 2) throw ValidationError("model config: max_seq too small");
}

Model::Model(ModelConfig config, Weights weights) : config_(config), weights_(std::move(weights)) {
    revalidate();
}

void Model::revalidate() {
    config_.validate();
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto dff = static_cast<std::size_t>(config_.d_ff);
    const auto vocab = static_cast<std::size_t>(config_.vocab_size);

    auto expect = [&](const std::vector<float>& v, std::size_t n, const char* name) {
        if (v.size() != n)
            throw ValidationError(std::string("weights: tensor '") + name + "' has wrong size");
        for (float x : v)
            if (!std::isfinite(x)) throw ValidationError(std::string("weights: non-finite value in '") + name + "'");
    };

    expect(weights_.tok_emb, vocab * d, "tok_emb");
    expect(weights_.pos_emb, static_cast<std::size_t>(config_.max_seq) * d, "pos_emb");
    if (weights_.blocks.size() != static_cast<std::size_t>(config_.n_layers))
        throw ValidationError("weights: block count does not match n_layers");
    for (const auto& blk : weights_.blocks) {
        expect(blk.ln1_g, d, "ln1.g");
        expect(blk.ln1_b, d, "ln1.b");
        expect(blk.wq, d * d, "attn.wq");
        expect(blk.wk, d * d, "attn.wk");
        expect(blk.wv, d * d, "attn.wv");
        expect(blk.wo, d * d, "attn.wo");
        expect(blk.bq, d, "attn.bq");
        expect(blk.bk, d, "attn.bk");
        expect(blk.bv, d, "attn.bv");
        expect(blk.bo, d, "attn.bo");
        expect(blk.ln2_g, d, "ln2.g");
        expect(blk.ln2_b, d, "ln2.b");
        expect(blk.w1, dff * d, "ffn.w1");
        expect(blk.b1, dff, "ffn.b1");
        expect(blk.w2, d * dff, "ffn.w2");
        expect(blk.b2, d, "ffn.b2");
    }
    expect(weights_.lnf_g, d, "ln_f.g");
    expect(weights_.lnf_b, d, "ln_f.b");
    expect(weights_.unembed, vocab * d, "unembed");

    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](const std::vector<float>& v) { h = fnv1a(v.data(), v.size() * sizeof(float), h); };
    mix(weights_.tok_emb);
    mix(weights_.pos_emb);
    for (const auto& blk : weights_.blocks) {
        for (const auto* t : {&blk.ln1_g, &blk.ln1_b, &blk.wq, &blk.wk, &blk.wv, &blk.wo, &blk.bq, &blk.bk,
                              &blk.bv, &blk.bo, &blk.ln2_g, &blk.ln2_b, &blk.w1, &blk.b1, &blk.w2, &blk.b2})
            mix(*t);
    }
    mix(weights_.lnf_g);
    mix(weights_.lnf_b);
    mix(weights_.unembed);
    weights_hash_ = h;
}

std::uint64_t Model::fingerprint() const {
    std::string cfg = std::to_string(config_.n_layers) + "/" + std::to_string(config_.d_model) + "/" +
                      std::to_string(config_.n_heads) + "/" + std::to_string(config_.d_ff) + "/" +
                      std::to_string(config_.vocab_size) + "/" + std::to_string(config_.max_seq);
    return fnv1a(cfg, weights_hash_);
}

Model Model::seeded(const ModelConfig& config) {
    config.validate();
    const auto d = static_cast<std::size_t>(config.d_model);
    const auto dff = static_cast<std::size_t>(config.d_ff);
    const auto vocab = static_cast<std::size_t>(config.vocab_size);
    const float w_scale = 1.0f / std::sqrt(static_cast<float>(d));
    const float ff_scale = 1.0f / std::sqrt(static_cast<float>(dff));

    Rng rng(config.seed);
    Weights w;
    w.tok_emb.resize(vocab * d);
    fill_uniform(w.tok_emb, rng, 0.1f);
    w.pos_emb.resize(static_cast<std::size_t>(config.max_seq) * d);
    fill_uniform(w.pos_emb, rng, 0.1f);
    w.blocks.resize(static_cast<std::size_t>(config.n_layers));
    for (auto& blk : w.blocks) {
        blk.ln1_g.assign(d, 1.0f);
        blk.ln1_b.assign(d, 0.0f);
        blk.wq.resize(d * d);
        blk.wk.resize(d * d);
        blk.wv.resize(d * d);
        blk.wo.resize(d * d);
        fill_uniform(blk.wq, rng, w_scale);
        fill_uniform(blk.wk, rng, w_scale);
        fill_uniform(blk.wv, rng, w_scale);
        fill_uniform(blk.wo, rng, w_scale);
        blk.bq.assign(d, 0.0f);
        blk.bk.assign(d, 0.0f);
        blk.bv.assign(d, 0.0f);
        blk.bo.assign(d, 0.0f);
        blk.ln2_g.assign(d, 1.0f);
        blk.ln2_b.assign(d, 0.0f);
        blk.w1.resize(dff * d);
        fill_uniform(blk.w1, rng, w_scale);
        blk.b1.assign(dff, 0.0f);
        blk.w2.resize(d * dff);
        fill_uniform(blk.w2, rng, ff_scale);
        blk.b2.assign(d, 0.0f);
    }
    w.lnf_g.assign(d, 1.0f);
    w.lnf_b.assign(d, 0.0f);
    w.unembed.resize(vocab * d);
    fill_uniform(w.unembed, rng, w_scale);
    return Model(config, std::move(w));
}

namespace {

struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<float>* data;
};

std::vector<TensorRef> enumerate_tensors(const ModelConfig& cfg, const Weights& w) {
    std::vector<TensorRef> out;
    const auto d = static_cast<std::size_t>(cfg.d_model);
    const auto dff = static_cast<std::size_t>(cfg.d_ff);
    const auto vocab = static_cast<std::size_t>(cfg.vocab_size);
    out.push_back({"tok_emb", {vocab, d}, &w.tok_emb});
    out.push_back({"pos_emb", {static_cast<std::size_t>(cfg.max_seq), d}, &w.pos_emb});
    for (std::size_t i = 0; i < w.blocks.size(); ++i) {
        const auto& blk = w.blocks[i];
        const std::string p = "b" + std::to_string(i) + ".";
        out.push_back({p + "ln1.g", {d}, &blk.ln1_g});
        out.push_back({p + "ln1.b", {d}, &blk.ln1_b});
        out.push_back({p + "attn.wq", {d, d}, &blk.wq});
        out.push_back({p + "attn.wk", {d, d}, &blk.wk});
        out.push_back({p + "attn.wv", {d, d}, &blk.wv});
        out.push_back({p + "attn.wo", {d, d}, &blk.wo});
        out.push_back({p + "attn.bq", {d}, &blk.bq});
        out.push_back({p + "attn.bk", {d}, &blk.bk});
        out.push_back({p + "attn.bv", {d}, &blk.bv});
        out.push_back({p + "attn.bo", {d}, &blk.bo});
        out.push_back({p + "ln2.g", {d}, &blk.ln2_g});
        out.push_back({p + "ln2.b", {d}, &blk.ln2_b});
        out.push_back({p + "ffn.w1", {dff, d}, &blk.w1});
        out.push_back({p + "ffn.b1", {dff}, &blk.b1});
        out.push_back({p + "ffn.w2", {d, dff}, &blk.w2});
        out.push_back({p + "ffn.b2", {d}, &blk.b2});
    }
    out.push_back({"ln_f.g", {d}, &w.lnf_g});
    out.push_back({"ln_f.b", {d}, &w.lnf_b});
    out.push_back({"unembed", {vocab, d}, &w.unembed});
    return out;
}

}  // namespace

void Model::save(const std::filesystem::path& file) const {
    const auto tensors = enumerate_tensors(config_, weights_);
    json header;
    header["meta"] = {{"n_layers", config_.n_layers}, {"d_model", config_.d_model},
                      {"n_heads", config_.n_heads},   {"d_ff", config_.d_ff},
                      {"vocab_size", config_.vocab_size}, {"max_seq", config_.max_seq},
                      {"seed", config_.seed}};
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        header["tensors"][t.name] = {{"shape", t.shape}, {"offset", offset}};
        offset += t.data->size();
    }
    const std::string hbytes = header.dump();
    std::ofstream out(file, std::ios::binary);
    if (!out.good()) throw ParseError("cannot write weight file: " + file.string());
    const std::uint64_t hlen = hbytes.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hbytes.data(), static_cast<std::streamsize>(hbytes.size()));
    for (const auto& t : tensors)
        out.write(reinterpret_cast<const char*>(t.data->data()),
                  static_cast<std::streamsize>(t.data->size() * sizeof(float)));
}

Model Model::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in.good()) throw ParseError("cannot open weight file: " + file.string());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in.good() || hlen == 0 || hlen > (1u << 24)) throw ParseError("weight file header corrupt: " + file.string());
    std::string hbytes(hlen, '\0');
    in.read(hbytes.data(), static_cast<std::streamsize>(hlen));
    json header;
    try {
        header = json::parse(hbytes);
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ": " + e.what());
    }

    ModelConfig cfg;
    const auto& meta = header.at("meta");
    cfg.n_layers = meta.at("n_layers");
    cfg.d_model = meta.at("d_model");
    cfg.n_heads = meta.at("n_heads");
    cfg.d_ff = meta.at("d_ff");
    cfg.vocab_size = meta.at("vocab_size");
    cfg.max_seq = meta.at("max_seq");
    cfg.seed = meta.value("seed", static_cast<std::uint64_t>(0));

    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(float) != 0) throw ParseError("weight file data not float-aligned: " + file.string());
    std::vector<float> flat(raw.size() / sizeof(float));
    std::memcpy(flat.data(), raw.data(), raw.size());

    Weights w;
    w.blocks.resize(static_cast<std::size_t>(cfg.n_layers));
    auto read_tensor = [&](const std::string& name, std::vector<float>& dst, std::size_t expect) {
        if (!header.at("tensors").contains(name))
            throw ParseError(file.string() + ": missing tensor '" + name + "'");
        const auto& t = header.at("tensors").at(name);
        std::size_t numel = 1;
        for (const auto& s : t.at("shape")) numel *= s.get<std::size_t>();
        const std::size_t offset = t.at("offset");
        if (numel != expect || offset + numel > flat.size())
            throw ParseError(file.string() + ": tensor '" + name + "' has bad shape or offset");
        dst.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                   flat.begin() + static_cast<std::ptrdiff_t>(offset + numel));
    };

    const auto d = static_cast<std::size_t>(cfg.d_model);
    const auto dff = static_cast<std::size_t>(cfg.d_ff);
    const auto vocab = static_cast<std::size_t>(cfg.vocab_size);
    read_tensor("tok_emb", w.tok_emb, vocab * d);
    read_tensor("pos_emb", w.pos_emb, static_cast<std::size_t>(cfg.max_seq) * d);
    for (std::size_t i = 0; i < w.blocks.size(); ++i) {
        auto& blk = w.blocks[i];
        const std::string p = "b" + std::to_string(i) + ".";
        read_tensor(p + "ln1.g", blk.ln1_g, d);
        read_tensor(p + "ln1.b", blk.ln1_b, d);
        read_tensor(p + "attn.wq", blk.wq, d * d);
        read_tensor(p + "attn.wk", blk.wk, d * d);
        read_tensor(p + "attn.wv", blk.wv, d * d);
        read_tensor(p + "attn.wo", blk.wo, d * d);
        read_tensor(p + "attn.bq", blk.bq, d);
        read_tensor(p + "attn.bk", blk.bk, d);
        read_tensor(p + "attn.bv", blk.bv, d);
        read_tensor(p + "attn.bo", blk.bo, d);
        read_tensor(p + "ln2.g", blk.ln2_g, d);
        read_tensor(p + "ln2.b", blk.ln2_b, d);
        read_tensor(p + "ffn.w1", blk.w1, dff * d);
        read_tensor(p + "ffn.b1", blk.b1, dff);
        read_tensor(p + "ffn.w2", blk.w2, d * dff);
        read_tensor(p + "ffn.b2", blk.b2, d);
    }
    read_tensor("ln_f.g", w.lnf_g, d);
    read_tensor("ln_f.b", w.lnf_b, d);
    read_tensor("unembed", w.unembed, vocab * d);
    return Model(cfg, std::move(w));
}

namespace {

void validate_intervention(const Intervention& iv, const ModelConfig& cfg, int seq) {
    if (iv.layer < 0 || iv.layer >= cfg.n_layers)
        throw ValidationError("intervention: layer out of range");
    if (iv.kind == InterventionKind::patch) {
        if (iv.position < 0 || iv.position >= seq)
            throw ValidationError("intervention: patch position out of range");
        if (iv.payload.size() != static_cast<std::size_t>(cfg.d_model))
            throw ValidationError("intervention: patch payload length must equal d_model");
        for (float v : iv.payload)
            if (!std::isfinite(v)) throw ValidationError("intervention: non-finite patch payload");
    } else {
        if (iv.sublayer == Sublayer::residual)
            throw ValidationError("intervention: ablations apply to mhsa or ffn sublayers");
        if (iv.kind == InterventionKind::noise_ablate && !iv.noise_seed)
            throw ValidationError("intervention: noise_ablate requires a noise_seed");
    }
}

// ablations replace the whole sublayer output; patches replace one position
void apply_sublayer_interventions(std::vector<float>& out, int seq, int d, int layer, Sublayer sub,
                                  std::span<const Intervention> ivs) {
    for (const auto& iv : ivs) {
        if (iv.layer != layer || iv.sublayer != sub) continue;
        if (iv.kind == InterventionKind::zero_ablate) {
            std::fill(out.begin(), out.end(), 0.0f);
        } else if (iv.kind == InterventionKind::noise_ablate) {
            const std::size_t n = out.size();
            const float mean = kernels::sum(out.data(), n) / static_cast<float>(n);
            const float var = kernels::sq_diff_sum(out.data(), mean, n) / static_cast<float>(n);
            const float sd = std::sqrt(var);
            Rng rng(*iv.noise_seed);
            for (auto& v : out) v = sd * static_cast<float>(rng.gaussian());
        } else {
            std::memcpy(out.data() + static_cast<std::size_t>(iv.position) * static_cast<std::size_t>(d),
                        iv.payload.data(), static_cast<std::size_t>(d) * sizeof(float));
        }
    }
    (void)seq;
}

}  // namespace

ForwardResult Model::forward(std::span<const int> tokens, int extraction_index,
                             std::span<const Intervention> interventions,
                             const ForwardOptions& options) const {
    const int seq = static_cast<int>(tokens.size());
    const int d = config_.d_model;
    const int n_heads = config_.n_heads;
    const int d_head = d / n_heads;
    const int dff = config_.d_ff;

    if (seq < 1) throw ValidationError("forward: empty token sequence");
    if (seq > config_.max_seq) throw ValidationError("forward: prompt exceeds max_seq");
    if (extraction_index < 0 || extraction_index >= seq)
        throw ValidationError("forward: extraction index out of range");
    for (int t : tokens)
        if (t < 0 || t >= config_.vocab_size) throw ValidationError("forward: token id out of range");
    for (const auto& iv : interventions) validate_intervention(iv, config_, seq);

    const auto ds = static_cast<std::size_t>(d);
    const auto seqs = static_cast<std::size_t>(seq);
    ForwardResult result;
    if (options.capture_attention)
        result.attention.resize(static_cast<std::size_t>(config_.n_layers));

    std::vector<float> x(seqs * ds);
    for (std::size_t t = 0; t < seqs; ++t) {
        const float* te = weights_.tok_emb.data() + static_cast<std::size_t>(tokens[t]) * ds;
        const float* pe = weights_.pos_emb.data() + t * ds;
        float* row = x.data() + t * ds;
        for (std::size_t i = 0; i < ds; ++i) row[i] = te[i] + pe[i];
    }

    auto capture_row = [&](std::vector<std::vector<float>>& dst, const float* base) {
        dst.emplace_back(base + static_cast<std::size_t>(extraction_index) * ds,
                         base + static_cast<std::size_t>(extraction_index) * ds + ds);
    };

    std::vector<float> normed(seqs * ds), q(seqs * ds), k(seqs * ds), v(seqs * ds);
    std::vector<float> sub_out(seqs * ds);
    std::vector<float> scores(seqs);
    std::vector<float> ff(static_cast<std::size_t>(dff));
    const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(d_head));

    for (int b = 0; b < config_.n_layers; ++b) {
        const auto& blk = weights_.blocks[static_cast<std::size_t>(b)];

        // residual-stream patches name the state entering this block
        for (const auto& iv : interventions)
            if (iv.kind == InterventionKind::patch && iv.sublayer == Sublayer::residual && iv.layer == b)
                std::memcpy(x.data() + static_cast<std::size_t>(iv.position) * ds, iv.payload.data(),
                            ds * sizeof(float));
        if (options.capture_residual) capture_row(result.residual, x.data());

        // attention sublayer
        for (std::size_t t = 0; t < seqs; ++t)
            layer_norm(x.data() + t * ds, blk.ln1_g.data(), blk.ln1_b.data(), normed.data() + t * ds, ds);
        for (std::size_t t = 0; t < seqs; ++t) {
            linear(normed.data() + t * ds, blk.wq.data(), blk.bq.data(), q.data() + t * ds, ds, ds);
            linear(normed.data() + t * ds, blk.wk.data(), blk.bk.data(), k.data() + t * ds, ds, ds);
            linear(normed.data() + t * ds, blk.wv.data(), blk.bv.data(), v.data() + t * ds, ds, ds);
        }
        std::fill(sub_out.begin(), sub_out.end(), 0.0f);
        std::vector<std::vector<float>>* att_layer = nullptr;
        if (options.capture_attention) {
            att_layer = &result.attention[static_cast<std::size_t>(b)];
            att_layer->resize(static_cast<std::size_t>(n_heads));
        }

        std::vector<float> head_mix(seqs * ds);
        for (int h = 0; h < n_heads; ++h) {
            const std::size_t off = static_cast<std::size_t>(h) * static_cast<std::size_t>(d_head);
            for (std::size_t i = 0; i < seqs; ++i) {
                const float* qi = q.data() + i * ds + off;
                for (std::size_t j = 0; j <= i; ++j)
                    scores[j] = kernels::dot(qi, k.data() + j * ds + off,
                                             static_cast<std::size_t>(d_head)) * inv_sqrt_dh;
                kernels::softmax_inplace(scores.data(), i + 1);
                if (att_layer && static_cast<int>(i) == extraction_index)
                    (*att_layer)[static_cast<std::size_t>(h)].assign(
                        scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(i + 1));
                float* out = head_mix.data() + i * ds + off;
                for (std::size_t j = 0; j <= i; ++j)
                    kernels::axpy(scores[j], v.data() + j * ds + off, out, static_cast<std::size_t>(d_head));
            }
        }
        for (std::size_t t = 0; t < seqs; ++t)
            linear(head_mix.data() + t * ds, blk.wo.data(), blk.bo.data(), sub_out.data() + t * ds, ds, ds);

        apply_sublayer_interventions(sub_out, seq, d, b, Sublayer::mhsa, interventions);
        if (options.capture_attn_out) capture_row(result.attn_out, sub_out.data());
        for (std::size_t i = 0; i < seqs * ds; ++i) x[i] += sub_out[i];

        // feed-forward sublayer
        for (std::size_t t = 0; t < seqs; ++t)
            layer_norm(x.data() + t * ds, blk.ln2_g.data(), blk.ln2_b.data(), normed.data() + t * ds, ds);
        for (std::size_t t = 0; t < seqs; ++t) {
            linear(normed.data() + t * ds, blk.w1.data(), blk.b1.data(), ff.data(), ds,
                   static_cast<std::size_t>(dff));
            kernels::gelu_inplace(ff.data(), static_cast<std::size_t>(dff));
            linear(ff.data(), blk.w2.data(), blk.b2.data(), sub_out.data() + t * ds,
                   static_cast<std::size_t>(dff), ds);
        }
        apply_sublayer_interventions(sub_out, seq, d, b, Sublayer::ffn, interventions);
        if (options.capture_ffn_out) capture_row(result.ffn_out, sub_out.data());
        for (std::size_t i = 0; i < seqs * ds; ++i) x[i] += sub_out[i];
    }

    if (options.capture_residual) capture_row(result.residual, x.data());

    std::vector<float> final_normed(ds);
    layer_norm(x.data() + static_cast<std::size_t>(extraction_index) * ds, weights_.lnf_g.data(),
               weights_.lnf_b.data(), final_normed.data(), ds);
    result.logits.resize(static_cast<std::size_t>(config_.vocab_size));
    for (std::size_t t = 0; t < result.logits.size(); ++t)
        result.logits[t] = kernels::dot(final_normed.data(), weights_.unembed.data() + t * ds, ds);

    result.argmax_token = 0;
    for (std::size_t t = 1; t < result.logits.size(); ++t)
        if (result.logits[t] > result.logits[static_cast<std::size_t>(result.argmax_token)])
            result.argmax_token = static_cast<int>(t);
    return result;
}

LabelReadout LabelReadout::from_labels(const std::array<std::string, 8>& labels, const ByteTokenizer& tok) {
    LabelReadout r;
    for (std::size_t i = 0; i < 8; ++i) r.first_token[i] = tok.first_token_of(labels[i]);
    return r;
}

std::array<float, 8> label_logits(const ForwardResult& result, const LabelReadout& readout) {
    std::array<float, 8> out{};
    for (std::size_t i = 0; i < 8; ++i) out[i] = result.logits[static_cast<std::size_t>(readout.first_token[i])];
    return out;
}

Emotion classify(const ForwardResult& result, const LabelReadout& readout) {
    const auto ll = label_logits(result, readout);
    std::size_t best = 0;
    for (std::size_t i = 1; i < 8; ++i)
        if (ll[i] > ll[best]) best = i;  // strict: ties keep the lower code
    return static_cast<Emotion>(best);
}

}  // namespace emolab
