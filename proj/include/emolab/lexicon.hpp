#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emolab/corpus.hpp"

namespace emolab {

// Keyword lists in the NRC/VADER style: six emotion categories plus
// positive/negative valence terms. Matching is exact on lowercased,
// punctuation-stripped words; no stemming.
struct Lexicon {
    static const std::array<std::string, 6>& categories();  // anger fear sadness joy disgust surprise

    std::map<std::string, std::set<std::string>> emotion_keywords;
    std::set<std::string> positive;
    std::set<std::string> negative;

    bool is_emotion_keyword(const std::string& word) const;
};

Lexicon load_lexicon(const std::filesystem::path& file);

struct LexiconReport {
    std::map<std::string, int> emotion_hits;
    int pos_count = 0;
    int neg_count = 0;
    std::optional<double> polarity;  // (pos - neg) / (pos + neg); absent when both zero
    bool invisible = false;          // zero emotion hits and at most one valence word

    int total_emotion_hits() const;
};

// lowercased words, punctuation stripped
std::vector<std::string> tokenize_words(std::string_view text);

LexiconReport analyze(std::string_view text, const Lexicon& lexicon);

struct CorpusAuditEntry {
    std::string id;
    SetTag set_tag = SetTag::A;
    LexiconReport report;
};

struct CorpusAudit {
    std::vector<CorpusAuditEntry> entries;
    // per set tag: (invisible, total)
    std::map<SetTag, std::pair<int, int>> by_set;

    double fraction_invisible(SetTag tag) const;
};

CorpusAudit audit_corpus(const Corpus& corpus, const Lexicon& lexicon);
void write_audit_csv(const CorpusAudit& audit, const std::filesystem::path& file);

// True where a token's own text, normalized, equals an emotion keyword.
// Subword/byte tokens never match whole keywords under this rule.
std::vector<bool> keyword_token_mask(std::span<const std::string> token_texts, const Lexicon& lexicon);

// Byte spans of whole words that match emotion keywords; used to map
// keyword positions onto token ranges for attention analysis.
struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};
std::vector<ByteSpan> keyword_spans(std::string_view text, const Lexicon& lexicon);

}  // namespace emolab
