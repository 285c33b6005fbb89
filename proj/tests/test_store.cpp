#include <doctest.h>

#include <filesystem>
#include <stdexcept>

#include "emolab/corpus.hpp"
#include "emolab/errors.hpp"
#include "emolab/model.hpp"
#include "emolab/store.hpp"

using namespace emolab;

namespace {

const std::filesystem::path kFixtures = EMOLAB_FIXTURE_DIR;

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.d_ff = 64;
    cfg.max_seq = 640;
    cfg.seed = 5;
    return cfg;
}

Corpus small_corpus(std::size_t n) {
    auto full = load_corpus(kFixtures / "corpus_b.jsonl");
    full.stimuli.resize(n);
    full.design.reset();
    return full;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

struct Interrupted : std::runtime_error {
    Interrupted() : std::runtime_error("interrupted") {}
};

}  // namespace

TEST_CASE("extraction persists one entry per stimulus and reopens identically") {
    auto model = Model::seeded(tiny_config());
    auto corpus = small_corpus(10);
    auto tpl = load_template(kFixtures / "template.json");
    auto dir = fresh_dir("store_basic");

    auto store = extract_corpus(model, corpus, tpl, dir);
    CHECK(store.size() == 10);
    CHECK(store.layer_count(Stream::residual) == 3);
    CHECK(store.layer_count(Stream::attn_out) == 2);
    CHECK(store.has_attention());

    auto reopened = ActivationStore::open(dir);
    CHECK(reopened.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(reopened.manifest().entries[i].id == corpus.stimuli[i].id);
        auto a = store.row(Stream::residual, 2, i);
        auto b = reopened.row(Stream::residual, 2, i);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }

    SUBCASE("attention rows sum to one") {
        for (int l = 0; l < 2; ++l)
            for (int h = 0; h < 2; ++h) {
                auto row = reopened.attention_row(3, l, h);
                float s = 0.0f;
                for (float w : row) s += w;
                CHECK(std::abs(s - 1.0f) < 1e-4f);
            }
    }
}

TEST_CASE("rerun on a complete store does zero forward passes") {
    auto model = Model::seeded(tiny_config());
    auto corpus = small_corpus(6);
    auto tpl = load_template(kFixtures / "template.json");
    auto dir = fresh_dir("store_idempotent");

    extract_corpus(model, corpus, tpl, dir);
    const auto h1 = store_content_hash(dir);

    std::size_t chunks_processed = 0;
    ExtractOptions opt;
    opt.progress = [&](std::size_t, std::size_t) { ++chunks_processed; };
    extract_corpus(model, corpus, tpl, dir, opt);
    CHECK(chunks_processed == 0);
    CHECK(store_content_hash(dir) == h1);
}

TEST_CASE("interrupted extraction resumes to a byte-identical store") {
    auto model = Model::seeded(tiny_config());
    auto corpus = small_corpus(24);
    auto tpl = load_template(kFixtures / "template.json");

    auto clean_dir = fresh_dir("store_clean");
    extract_corpus(model, corpus, tpl, clean_dir);
    const auto want = store_content_hash(clean_dir);

    auto resumed_dir = fresh_dir("store_resumed");
    ExtractOptions opt;
    opt.progress = [](std::size_t done, std::size_t) {
        if (done >= 8) throw Interrupted();
    };
    CHECK_THROWS_AS(extract_corpus(model, corpus, tpl, resumed_dir, opt), Interrupted);
    // resume without the failure injection
    extract_corpus(model, corpus, tpl, resumed_dir);
    CHECK(store_content_hash(resumed_dir) == want);
}

TEST_CASE("manifest guards reject a different model or template") {
    auto model = Model::seeded(tiny_config());
    auto corpus = small_corpus(4);
    auto tpl = load_template(kFixtures / "template.json");
    auto dir = fresh_dir("store_guard");
    extract_corpus(model, corpus, tpl, dir);

    SUBCASE("changed d_model") {
        auto cfg = tiny_config();
        cfg.d_model = 64;
        cfg.n_heads = 4;
        auto other = Model::seeded(cfg);
        CHECK_THROWS_AS(extract_corpus(other, corpus, tpl, dir), ValidationError);
    }
    SUBCASE("changed seed") {
        auto cfg = tiny_config();
        cfg.seed = 6;
        auto other = Model::seeded(cfg);
        CHECK_THROWS_AS(extract_corpus(other, corpus, tpl, dir), ValidationError);
    }
    SUBCASE("zero-shot template") {
        CHECK_THROWS_AS(extract_corpus(model, corpus, strip_few_shot(tpl), dir), ValidationError);
    }
    SUBCASE("missing store names the extract command") {
        try {
            ActivationStore::open(fresh_dir("store_missing"));
            FAIL("expected throw");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("extract") != std::string::npos);
        }
    }
}

TEST_CASE("threaded extraction matches single-threaded output byte for byte") {
    auto model = Model::seeded(tiny_config());
    auto corpus = small_corpus(12);
    auto tpl = load_template(kFixtures / "template.json");

    auto d1 = fresh_dir("store_t1");
    ExtractOptions o1;
    o1.threads = 1;
    extract_corpus(model, corpus, tpl, d1, o1);

    auto d2 = fresh_dir("store_t2");
    ExtractOptions o2;
    o2.threads = 2;
    extract_corpus(model, corpus, tpl, d2, o2);

    CHECK(store_content_hash(d1) == store_content_hash(d2));
}
