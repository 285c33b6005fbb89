#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emolab {

// Peak intensities of the eight Plutchik primaries; codes are the stable
// serialization order.
enum class Emotion : int {
    ecstasy = 0,
    admiration = 1,
    terror = 2,
    amazement = 3,
    grief = 4,
    loathing = 5,
    rage = 6,
    vigilance = 7,
};

constexpr int kEmotionCount = 8;

std::string_view to_string(Emotion e);
std::optional<Emotion> emotion_from_string(std::string_view s);
std::array<Emotion, 8> all_emotions();

enum class SetTag { A, B, B_neutral, C };

std::string_view to_string(SetTag t);
std::optional<SetTag> set_tag_from_string(std::string_view s);

// stimuli in {B_neutral, C} are unlabeled by construction
inline bool set_is_neutral(SetTag t) { return t == SetTag::B_neutral || t == SetTag::C; }

struct Stimulus {
    std::string id;
    std::string text;
    std::optional<Emotion> emotion;
    std::string topic_domain;
    SetTag set_tag = SetTag::A;
    int word_count = 0;  // derived on load
};

// Declared emotions x domains x per-cell layout; the audit checks the
// loaded corpus against it.
struct FactorialDesign {
    int domains_per_emotion = 0;
    int per_cell = 0;
};

struct Corpus {
    std::vector<Stimulus> stimuli;
    std::optional<FactorialDesign> design;

    std::size_t size() const { return stimuli.size(); }
    const Stimulus* find(std::string_view id) const;
    // distinct topic domains in first-appearance order
    std::vector<std::string> topic_domains() const;
    std::uint64_t content_hash() const;
};

// Line-delimited JSON, one stimulus per line:
// {"id", "text", "emotion"|null, "topic_domain", "set_tag"}.
Corpus load_corpus(const std::filesystem::path& file,
                   std::optional<FactorialDesign> design = std::nullopt);
void save_corpus(const Corpus& corpus, const std::filesystem::path& file);

struct CellCount {
    Emotion emotion;
    std::string domain;
    int count = 0;
};

struct FactorialAudit {
    bool design_declared = false;
    std::vector<CellCount> cells;
    std::vector<std::string> problems;  // empty means the design is satisfied
};

FactorialAudit factorial_audit(const Corpus& corpus);

struct FewShotExample {
    std::string text;
    std::string label;
};

// Few-shot classification prompt. `labels` are the strings the model is
// asked to produce, in emotion-code order; fixtures pick strings with
// distinct first bytes so single-token readout can tell them apart.
struct PromptTemplate {
    std::string preamble;
    std::vector<FewShotExample> few_shot;
    std::string answer_marker = "Answer:";
    std::array<std::string, 8> labels;

    static std::array<std::string, 8> default_labels();
};

PromptTemplate load_template(const std::filesystem::path& file);
PromptTemplate strip_few_shot(PromptTemplate t);  // zero-shot variant

// Deterministic render: preamble, examples, target text, one trailing
// answer marker. Throws ValidationError if the marker lacks a ':'.
std::string render_prompt(const PromptTemplate& tpl, const Stimulus& target);

std::uint64_t template_hash(const PromptTemplate& tpl);

int count_words(std::string_view text);

}  // namespace emolab
