#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "emolab/corpus.hpp"
#include "emolab/errors.hpp"
#include "emolab/lexicon.hpp"
#include "emolab/rng.hpp"
#include "emolab/tokenizer.hpp"

using namespace emolab;

namespace {

const std::filesystem::path kFixtures = EMOLAB_FIXTURE_DIR;

Lexicon tiny_lexicon() {
    Lexicon lex;
    for (const auto& cat : Lexicon::categories()) lex.emotion_keywords[cat] = {};
    lex.emotion_keywords["sadness"] = {"devastated", "grief"};
    lex.emotion_keywords["anger"] = {"furious"};
    lex.positive = {"lovely", "warm"};
    lex.negative = {"cold", "awful"};
    return lex;
}

}  // namespace

TEST_CASE("polarity formula") {
    auto lex = tiny_lexicon();
    SUBCASE("(3 - 1) / (3 + 1) = 0.5") {
        auto rep = analyze("lovely warm lovely cold", lex);
        CHECK(rep.pos_count == 3);
        CHECK(rep.neg_count == 1);
        REQUIRE(rep.polarity);
        CHECK(*rep.polarity == 0.5);
        CHECK(!rep.invisible);  // two valence words
    }
    SUBCASE("zero denominator leaves polarity undefined") {
        auto rep = analyze("the ferry runs hourly", lex);
        CHECK(rep.pos_count == 0);
        CHECK(rep.neg_count == 0);
        CHECK(!rep.polarity);
        CHECK(rep.invisible);
    }
    SUBCASE("one incidental valence word stays invisible") {
        auto rep = analyze("The thermos sat unopened on the tray, the tea gone cold.", lex);
        CHECK(rep.total_emotion_hits() == 0);
        CHECK(rep.pos_count + rep.neg_count == 1);
        CHECK(rep.invisible);
    }
    SUBCASE("empty text is an all-zero, invisible report") {
        auto rep = analyze("", lex);
        CHECK(rep.total_emotion_hits() == 0);
        CHECK(!rep.polarity);
        CHECK(rep.invisible);
    }
}

TEST_CASE("analyze properties") {
    auto lex = tiny_lexicon();
    SUBCASE("case-insensitive") {
        auto a = analyze("DEVASTATED but Lovely, COLD morning", lex);
        auto b = analyze("devastated but lovely, cold morning", lex);
        CHECK(a.emotion_hits == b.emotion_hits);
        CHECK(a.pos_count == b.pos_count);
        CHECK(a.neg_count == b.neg_count);
    }
    SUBCASE("polarity flips when the valence lexicons swap") {
        Lexicon swapped = lex;
        std::swap(swapped.positive, swapped.negative);
        for (std::string text : {"lovely cold", "warm warm cold", "awful lovely lovely"}) {
            auto a = analyze(text, lex);
            auto b = analyze(text, swapped);
            REQUIRE(a.polarity);
            REQUIRE(b.polarity);
            CHECK(*a.polarity == -*b.polarity);
            CHECK(*a.polarity >= -1.0);
            CHECK(*a.polarity <= 1.0);
        }
    }
    SUBCASE("removing words never flips invisible from true to false") {
        Rng rng(42);
        const std::string text = "the furious driver left a lovely cold awful note on the warm glass";
        for (int rep = 0; rep < 200; ++rep) {
            auto words = tokenize_words(text);
            // random subset in original order
            std::string sub, sub_smaller;
            const std::size_t drop = rng.index(words.size());
            for (std::size_t i = 0; i < words.size(); ++i) {
                if (rng.uniform() < 0.5) continue;
                sub += words[i] + " ";
                if (i != drop) sub_smaller += words[i] + " ";
            }
            if (analyze(sub, lex).invisible) CHECK(analyze(sub_smaller, lex).invisible);
        }
    }
}

TEST_CASE("fixture lexicon passes validation and shape checks") {
    auto lex = load_lexicon(kFixtures / "lexicon.json");
    CHECK(lex.emotion_keywords.size() == 6);
    for (const auto& cat : Lexicon::categories()) {
        REQUIRE(lex.emotion_keywords.count(cat));
        CHECK(lex.emotion_keywords.at(cat).size() >= 20);
        CHECK(lex.emotion_keywords.at(cat).size() <= 25);
    }
    CHECK(lex.positive.size() >= 33);
    CHECK(lex.negative.size() >= 33);
}

TEST_CASE("lexicon validation rejects bad files") {
    auto bad = std::filesystem::temp_directory_path() / "bad_lexicon.json";
    SUBCASE("term in both valence sets") {
        std::ofstream(bad) << R"({"emotion_keywords":{"anger":["x"],"fear":["y"],"sadness":["z"],
            "joy":["a"],"disgust":["b"],"surprise":["c"]},"positive":["cold"],"negative":["cold"]})";
        CHECK_THROWS_AS(load_lexicon(bad), ValidationError);
    }
    SUBCASE("uppercase term") {
        std::ofstream(bad) << R"({"emotion_keywords":{"anger":["Angry"],"fear":["y"],"sadness":["z"],
            "joy":["a"],"disgust":["b"],"surprise":["c"]},"positive":["p"],"negative":["n"]})";
        CHECK_THROWS_AS(load_lexicon(bad), ValidationError);
    }
    SUBCASE("missing category") {
        std::ofstream(bad) << R"({"emotion_keywords":{"anger":["x"]},"positive":["p"],"negative":["n"]})";
        CHECK_THROWS_AS(load_lexicon(bad), ValidationError);
    }
}

TEST_CASE("corpus audits against the shipped lexicon") {
    auto lex = load_lexicon(kFixtures / "lexicon.json");
    SUBCASE("set A is majority visible (keyword-rich)") {
        auto a = load_corpus(kFixtures / "corpus_a.jsonl");
        auto audit = audit_corpus(a, lex);
        CHECK(audit.fraction_invisible(SetTag::A) < 0.5);
    }
    SUBCASE("set B is fully invisible") {
        auto b = load_corpus(kFixtures / "corpus_b.jsonl");
        auto audit = audit_corpus(b, lex);
        CHECK(audit.fraction_invisible(SetTag::B) == 1.0);
        CHECK(audit.entries.size() == 96);
    }
    SUBCASE("audit csv is written with one row per stimulus") {
        auto b = load_corpus(kFixtures / "corpus_b_neutral.jsonl");
        auto audit = audit_corpus(b, lex);
        auto p = std::filesystem::temp_directory_path() / "audit.csv";
        write_audit_csv(audit, p);
        std::ifstream in(p);
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == b.size() + 1);
    }
}

TEST_CASE("keyword token masks") {
    auto lex = tiny_lexicon();
    SUBCASE("whole-word token match") {
        std::vector<std::string> tokens = {"I", "was", "devastated"};
        auto mask = keyword_token_mask(tokens, lex);
        CHECK(mask == std::vector<bool>{false, false, true});
    }
    SUBCASE("neutral tokens give an all-false mask") {
        std::vector<std::string> tokens = {"the", "ferry", "runs"};
        auto mask = keyword_token_mask(tokens, lex);
        CHECK(mask == std::vector<bool>{false, false, false});
    }
    SUBCASE("subword pieces never match under the exact rule") {
        std::vector<std::string> tokens = {"devast", "ated"};
        auto mask = keyword_token_mask(tokens, lex);
        CHECK(mask == std::vector<bool>{false, false});
        // byte tokens are single characters, so the same holds there
        ByteTokenizer tok;
        const auto ids = tok.encode("devastated");
        std::vector<std::string> texts;
        for (int id : ids) texts.push_back(tok.token_text(id));
        auto byte_mask = keyword_token_mask(texts, lex);
        for (bool m : byte_mask) CHECK(!m);
    }
    SUBCASE("whole-word byte spans map keywords onto character ranges") {
        const std::string text = "I was devastated, then furious.";
        auto spans = keyword_spans(text, lex);
        REQUIRE(spans.size() == 2);
        CHECK(text.substr(spans[0].begin, spans[0].end - spans[0].begin) == "devastated");
        CHECK(text.substr(spans[1].begin, spans[1].end - spans[1].begin) == "furious");
    }
}
