#include <doctest.h>

#include <cstdio>
#include <set>
#include <filesystem>
#include <fstream>

#include "emolab/corpus.hpp"
#include "emolab/errors.hpp"
#include "emolab/tokenizer.hpp"

using namespace emolab;

namespace {

const std::filesystem::path kFixtures = EMOLAB_FIXTURE_DIR;

std::filesystem::path temp_file(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove(p);
    return p;
}

}  // namespace

TEST_CASE("emotion codes are stable") {
    CHECK(static_cast<int>(Emotion::ecstasy) == 0);
    CHECK(static_cast<int>(Emotion::vigilance) == 7);
    for (Emotion e : all_emotions()) CHECK(emotion_from_string(to_string(e)) == e);
    CHECK(!emotion_from_string("anger"));
}

TEST_CASE("the 8x3x4 fixture loads to a 96-stimulus corpus") {
    auto corpus = load_corpus(kFixtures / "corpus_b.jsonl", FactorialDesign{3, 4});
    CHECK(corpus.size() == 96);
    auto audit = factorial_audit(corpus);
    CHECK(audit.design_declared);
    CHECK(audit.problems.empty());
    CHECK(audit.cells.size() == 24);
    for (const auto& cell : audit.cells) CHECK(cell.count == 4);
}

TEST_CASE("corpus validation failures") {
    SUBCASE("empty corpus") {
        auto p = temp_file("empty_corpus.jsonl");
        std::ofstream(p) << "";
        CHECK_THROWS_AS(load_corpus(p), ValidationError);
    }
    SUBCASE("duplicate id") {
        auto p = temp_file("dup_corpus.jsonl");
        std::ofstream(p) << R"({"id":"x","text":"a b","emotion":"grief","topic_domain":"t","set_tag":"B"})"
                         << "\n"
                         << R"({"id":"x","text":"c d","emotion":"rage","topic_domain":"t","set_tag":"B"})"
                         << "\n";
        CHECK_THROWS_AS(load_corpus(p), ValidationError);
    }
    SUBCASE("neutral stimulus with an emotion label") {
        auto p = temp_file("neutral_emo.jsonl");
        std::ofstream(p) << R"({"id":"x","text":"a","emotion":"grief","topic_domain":"t","set_tag":"B_neutral"})"
                         << "\n";
        CHECK_THROWS_AS(load_corpus(p), ValidationError);
    }
    SUBCASE("labeled set missing its emotion") {
        auto p = temp_file("missing_emo.jsonl");
        std::ofstream(p) << R"({"id":"x","text":"a","emotion":null,"topic_domain":"t","set_tag":"A"})" << "\n";
        CHECK_THROWS_AS(load_corpus(p), ValidationError);
    }
    SUBCASE("malformed json") {
        auto p = temp_file("bad_json.jsonl");
        std::ofstream(p) << "{not json\n";
        CHECK_THROWS_AS(load_corpus(p), ParseError);
    }
    SUBCASE("factorial mismatch is flagged by the audit and rejected on load") {
        auto full = load_corpus(kFixtures / "corpus_b.jsonl");
        full.stimuli.pop_back();  // remove one vignette
        auto p = temp_file("short_corpus.jsonl");
        save_corpus(full, p);
        CHECK_THROWS_AS(load_corpus(p, FactorialDesign{3, 4}), ValidationError);

        auto loaded = load_corpus(p);
        loaded.design = FactorialDesign{3, 4};
        auto audit = factorial_audit(loaded);
        CHECK(audit.problems.size() == 1);
        CHECK(audit.problems.front().find("has 3") != std::string::npos);
    }
    SUBCASE("no design declared") {
        auto corpus = load_corpus(kFixtures / "corpus_a.jsonl");
        auto audit = factorial_audit(corpus);
        CHECK(!audit.design_declared);
        REQUIRE(audit.problems.size() == 1);
        CHECK(audit.problems.front() == "no design declared");
    }
}

TEST_CASE("corpus round-trips through save/load") {
    auto corpus = load_corpus(kFixtures / "corpus_b.jsonl");
    auto p = temp_file("roundtrip.jsonl");
    save_corpus(corpus, p);
    auto again = load_corpus(p);
    REQUIRE(again.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(again.stimuli[i].id == corpus.stimuli[i].id);
        CHECK(again.stimuli[i].text == corpus.stimuli[i].text);
        CHECK(again.stimuli[i].emotion == corpus.stimuli[i].emotion);
        CHECK(again.stimuli[i].topic_domain == corpus.stimuli[i].topic_domain);
        CHECK(again.stimuli[i].set_tag == corpus.stimuli[i].set_tag);
    }
    CHECK(again.content_hash() == corpus.content_hash());
}

TEST_CASE("prompt rendering") {
    auto tpl = load_template(kFixtures / "template.json");
    REQUIRE(tpl.few_shot.size() == 2);

    Stimulus target;
    target.id = "t";
    target.text = "The dog waited by the gate at five.";
    target.emotion = Emotion::grief;
    target.set_tag = SetTag::B;
    target.topic_domain = "home";

    SUBCASE("prompt ends with the marker and renders deterministically") {
        const auto p1 = render_prompt(tpl, target);
        const auto p2 = render_prompt(tpl, target);
        CHECK(p1 == p2);
        REQUIRE(p1.size() >= tpl.answer_marker.size());
        CHECK(p1.substr(p1.size() - tpl.answer_marker.size()) == tpl.answer_marker);
        // marker appears exactly once after the target text
        const auto target_pos = p1.rfind(target.text);
        REQUIRE(target_pos != std::string::npos);
        std::size_t count = 0;
        for (auto pos = p1.find(tpl.answer_marker, target_pos); pos != std::string::npos;
             pos = p1.find(tpl.answer_marker, pos + 1))
            ++count;
        CHECK(count == 1);
    }

    SUBCASE("zero-shot render drops the examples, same extraction rule") {
        const auto zs = render_prompt(strip_few_shot(tpl), target);
        CHECK(zs.find(tpl.few_shot[0].text) == std::string::npos);
        ByteTokenizer tok;
        const auto tokens = tok.encode(zs);
        const int idx = find_extraction_index(tokens);
        REQUIRE(idx >= 0);
        CHECK(idx == static_cast<int>(tokens.size()) - 1);
    }

    SUBCASE("extraction index lands on the final marker colon even when the target has colons") {
        target.text = "Note to self: recheck the gate at 5:15.";
        const auto p = render_prompt(tpl, target);
        ByteTokenizer tok;
        const auto tokens = tok.encode(p);
        const int idx = find_extraction_index(tokens);
        REQUIRE(idx >= 0);
        CHECK(idx == static_cast<int>(tokens.size()) - 1);
        CHECK(tok.token_text(tokens[static_cast<std::size_t>(idx)]) == ":");
    }

    SUBCASE("corrupted marker is rejected") {
        tpl.answer_marker = "Answer";
        CHECK_THROWS_AS(render_prompt(tpl, target), ValidationError);
    }
}

TEST_CASE("template fixture labels have distinct first tokens") {
    auto tpl = load_template(kFixtures / "template.json");
    ByteTokenizer tok;
    std::set<int> firsts;
    for (const auto& label : tpl.labels) firsts.insert(tok.first_token_of(label));
    CHECK(firsts.size() == 8);
}

TEST_CASE("byte tokenizer round-trips any string") {
    ByteTokenizer tok;
    for (std::string s : {std::string("hello: world"), std::string(""), std::string("\xc3\xa9\xf0\x9f\x98\x80"),
                          std::string("line\nbreak\ttab")}) {
        const auto t = tok.encode(s);
        REQUIRE(!t.empty());
        CHECK(t[0] == ByteTokenizer::kBos);
        CHECK(tok.decode(t) == s);
    }
    CHECK(find_extraction_index(tok.encode("no marker here")) == -1);
}
