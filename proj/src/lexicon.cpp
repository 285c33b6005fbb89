#include "emolab/lexicon.hpp"

#include <cctype>
#include <fstream>
#include <json.hpp>

#include "emolab/errors.hpp"
#include "emolab/util.hpp"

namespace emolab {

namespace {
using nlohmann::json;

bool word_char(unsigned char c) { return std::isalnum(c) != 0 || c == '\''; }

std::string lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

}  // namespace

const std::array<std::string, 6>& Lexicon::categories() {
    static const std::array<std::string, 6> cats = {"anger", "fear", "sadness", "joy", "disgust", "surprise"};
    return cats;
}

bool Lexicon::is_emotion_keyword(const std::string& word) const {
    for (const auto& [cat, terms] : emotion_keywords)
        if (terms.count(word)) return true;
    return false;
}

Lexicon load_lexicon(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in.good()) throw ParseError("cannot open lexicon file: " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ": " + e.what());
    }

    Lexicon lex;
    try {
        const auto& kw = j.at("emotion_keywords");
        for (const auto& cat : Lexicon::categories()) {
            if (!kw.contains(cat))
                throw ValidationError(file.string() + ": lexicon missing emotion category '" + cat + "'");
            for (const auto& term : kw.at(cat)) lex.emotion_keywords[cat].insert(term.get<std::string>());
        }
        if (kw.size() != Lexicon::categories().size())
            throw ValidationError(file.string() + ": lexicon must have exactly the six emotion categories");
        for (const auto& term : j.at("positive")) lex.positive.insert(term.get<std::string>());
        for (const auto& term : j.at("negative")) lex.negative.insert(term.get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ": " + e.what());
    }

    auto check_term = [&](const std::string& t) {
        if (t.empty()) throw ValidationError(file.string() + ": empty lexicon term");
        for (unsigned char c : t)
            if (std::isspace(c) || std::isupper(c))
                throw ValidationError(file.string() + ": term '" + t + "' must be lowercase, whitespace-free");
    };
    for (const auto& [cat, terms] : lex.emotion_keywords)
        for (const auto& t : terms) check_term(t);
    for (const auto& t : lex.positive) check_term(t);
    for (const auto& t : lex.negative) check_term(t);
    for (const auto& t : lex.positive)
        if (lex.negative.count(t))
            throw ValidationError(file.string() + ": term '" + t + "' appears in both valence sets");
    return lex;
}

int LexiconReport::total_emotion_hits() const {
    int n = 0;
    for (const auto& [cat, c] : emotion_hits) n += c;
    return n;
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

LexiconReport analyze(std::string_view text, const Lexicon& lexicon) {
    LexiconReport rep;
    for (const auto& cat : Lexicon::categories()) rep.emotion_hits[cat] = 0;
    for (const auto& w : tokenize_words(text)) {
        for (const auto& [cat, terms] : lexicon.emotion_keywords)
            if (terms.count(w)) ++rep.emotion_hits[cat];
        if (lexicon.positive.count(w)) ++rep.pos_count;
        if (lexicon.negative.count(w)) ++rep.neg_count;
    }
    const int valence = rep.pos_count + rep.neg_count;
    if (valence > 0)
        rep.polarity = static_cast<double>(rep.pos_count - rep.neg_count) / static_cast<double>(valence);
    rep.invisible = rep.total_emotion_hits() == 0 && valence <= 1;
    return rep;
}

CorpusAudit audit_corpus(const Corpus& corpus, const Lexicon& lexicon) {
    CorpusAudit audit;
    for (const auto& s : corpus.stimuli) {
        CorpusAuditEntry entry;
        entry.id = s.id;
        entry.set_tag = s.set_tag;
        entry.report = analyze(s.text, lexicon);
        auto& [inv, total] = audit.by_set[s.set_tag];
        ++total;
        if (entry.report.invisible) ++inv;
        audit.entries.push_back(std::move(entry));
    }
    return audit;
}

double CorpusAudit::fraction_invisible(SetTag tag) const {
    const auto it = by_set.find(tag);
    if (it == by_set.end() || it->second.second == 0) return 0.0;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
}

void write_audit_csv(const CorpusAudit& audit, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out.good()) throw ParseError("cannot write audit csv: " + file.string());
    out << "id,set_tag";
    for (const auto& cat : Lexicon::categories()) out << "," << cat;
    out << ",pos,neg,polarity,invisible\n";
    for (const auto& e : audit.entries) {
        out << e.id << "," << to_string(e.set_tag);
        for (const auto& cat : Lexicon::categories()) out << "," << e.report.emotion_hits.at(cat);
        out << "," << e.report.pos_count << "," << e.report.neg_count << ",";
        if (e.report.polarity) out << format_double(*e.report.polarity);
        else out << "NA";
        out << "," << (e.report.invisible ? 1 : 0) << "\n";
    }
}

std::vector<bool> keyword_token_mask(std::span<const std::string> token_texts, const Lexicon& lexicon) {
    std::vector<bool> mask(token_texts.size(), false);
    for (std::size_t i = 0; i < token_texts.size(); ++i) {
        const auto words = tokenize_words(token_texts[i]);
        if (words.size() != 1) continue;  // exact whole-word rule
        mask[i] = lexicon.is_emotion_keyword(words[0]);
    }
    return mask;
}

std::vector<ByteSpan> keyword_spans(std::string_view text, const Lexicon& lexicon) {
    std::vector<ByteSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && word_char(static_cast<unsigned char>(text[j]))) ++j;
        const std::string word = lower(text.substr(i, j - i));
        if (lexicon.is_emotion_keyword(word)) spans.push_back({i, j});
        i = j;
    }
    return spans;
}

}  // namespace emolab
