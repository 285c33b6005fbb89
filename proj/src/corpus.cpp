#include "emolab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "emolab/errors.hpp"
#include "emolab/util.hpp"

namespace emolab {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 8> kEmotionNames = {
    "ecstasy", "admiration", "terror", "amazement", "grief", "loathing", "rage", "vigilance"};

}  // namespace

std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }

std::optional<Emotion> emotion_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
        if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
    return std::nullopt;
}

std::array<Emotion, 8> all_emotions() {
    std::array<Emotion, 8> out{};
    for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<Emotion>(i);
    return out;
}

std::string_view to_string(SetTag t) {
    switch (t) {
        case SetTag::A: return "A";
        case SetTag::B: return "B";
        case SetTag::B_neutral: return "B_neutral";
        case SetTag::C: return "C";
    }
    return "?";
}

std::optional<SetTag> set_tag_from_string(std::string_view s) {
    if (s == "A") return SetTag::A;
    if (s == "B") return SetTag::B;
    if (s == "B_neutral") return SetTag::B_neutral;
    if (s == "C") return SetTag::C;
    return std::nullopt;
}

int count_words(std::string_view text) {
    int n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

const Stimulus* Corpus::find(std::string_view id) const {
    for (const auto& s : stimuli)
        if (s.id == id) return &s;
    return nullptr;
}

std::vector<std::string> Corpus::topic_domains() const {
    std::vector<std::string> out;
    for (const auto& s : stimuli)
        if (std::find(out.begin(), out.end(), s.topic_domain) == out.end()) out.push_back(s.topic_domain);
    return out;
}

std::uint64_t Corpus::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& s : stimuli) {
        h = fnv1a(s.id, h);
        h = fnv1a(s.text, h);
        h = fnv1a(s.emotion ? std::string(to_string(*s.emotion)) : std::string("-"), h);
        h = fnv1a(s.topic_domain, h);
        h = fnv1a(std::string(to_string(s.set_tag)), h);
    }
    return h;
}

namespace {

void validate_corpus(const Corpus& corpus, const std::filesystem::path& file) {
    if (corpus.stimuli.empty())
        throw ValidationError(file.string() + ": corpus contains no stimuli");

    std::set<std::string> ids;
    for (const auto& s : corpus.stimuli) {
        if (s.id.empty()) throw ValidationError(file.string() + ": stimulus with empty id");
        if (!ids.insert(s.id).second)
            throw ValidationError(file.string() + ": duplicate stimulus id '" + s.id + "'");
        if (s.text.empty()) throw ValidationError(file.string() + ": stimulus '" + s.id + "' has empty text");
        if (set_is_neutral(s.set_tag) && s.emotion)
            throw ValidationError(file.string() + ": neutral stimulus '" + s.id + "' carries an emotion label");
        if (!set_is_neutral(s.set_tag) && !s.emotion)
            throw ValidationError(file.string() + ": stimulus '" + s.id + "' in set " +
                                  std::string(to_string(s.set_tag)) + " is missing its emotion label");
    }

    if (corpus.design) {
        const auto audit = factorial_audit(corpus);
        if (!audit.problems.empty())
            throw ValidationError(file.string() + ": factorial design violated: " + audit.problems.front());
    }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& file, std::optional<FactorialDesign> design) {
    std::ifstream in(file);
    if (!in.good()) throw ParseError("cannot open corpus file: " + file.string());

    Corpus corpus;
    corpus.design = design;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        Stimulus s;
        try {
            s.id = j.at("id").get<std::string>();
            s.text = j.at("text").get<std::string>();
            if (!j.at("emotion").is_null()) {
                const auto name = j.at("emotion").get<std::string>();
                const auto e = emotion_from_string(name);
                if (!e)
                    throw ParseError(file.string() + ":" + std::to_string(line_no) +
                                     ": unknown emotion '" + name + "'");
                s.emotion = *e;
            }
            s.topic_domain = j.at("topic_domain").get<std::string>();
            const auto tag_name = j.at("set_tag").get<std::string>();
            const auto tag = set_tag_from_string(tag_name);
            if (!tag)
                throw ParseError(file.string() + ":" + std::to_string(line_no) + ": unknown set_tag '" +
                                 tag_name + "'");
            s.set_tag = *tag;
        } catch (const json::exception& e) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        s.word_count = count_words(s.text);
        corpus.stimuli.push_back(std::move(s));
    }

    validate_corpus(corpus, file);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out.good()) throw ParseError("cannot write corpus file: " + file.string());
    for (const auto& s : corpus.stimuli) {
        json j;
        j["id"] = s.id;
        j["text"] = s.text;
        if (s.emotion) j["emotion"] = std::string(to_string(*s.emotion));
        else j["emotion"] = nullptr;
        j["topic_domain"] = s.topic_domain;
        j["set_tag"] = std::string(to_string(s.set_tag));
        out << j.dump() << "\n";
    }
}

FactorialAudit factorial_audit(const Corpus& corpus) {
    FactorialAudit audit;
    audit.design_declared = corpus.design.has_value();

    std::map<std::pair<Emotion, std::string>, int> counts;
    for (const auto& s : corpus.stimuli)
        if (s.emotion) ++counts[{*s.emotion, s.topic_domain}];
    for (const auto& [key, n] : counts) audit.cells.push_back({key.first, key.second, n});

    if (!audit.design_declared) {
        audit.problems.push_back("no design declared");
        return audit;
    }

    const auto& d = *corpus.design;
    for (Emotion e : all_emotions()) {
        int domains = 0;
        for (const auto& cell : audit.cells) {
            if (cell.emotion != e) continue;
            ++domains;
            if (cell.count != d.per_cell) {
                std::ostringstream msg;
                msg << "cell (" << to_string(e) << ", " << cell.domain << ") has " << cell.count
                    << " stimuli, expected " << d.per_cell;
                audit.problems.push_back(msg.str());
            }
        }
        if (domains != d.domains_per_emotion) {
            std::ostringstream msg;
            msg << "emotion " << to_string(e) << " spans " << domains << " domains, expected "
                << d.domains_per_emotion;
            audit.problems.push_back(msg.str());
        }
    }
    return audit;
}

std::array<std::string, 8> PromptTemplate::default_labels() {
    std::array<std::string, 8> out;
    for (std::size_t i = 0; i < 8; ++i) out[i] = std::string(kEmotionNames[i]);
    return out;
}

PromptTemplate load_template(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in.good()) throw ParseError("cannot open template file: " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ": " + e.what());
    }
    PromptTemplate tpl;
    tpl.labels = PromptTemplate::default_labels();
    try {
        tpl.preamble = j.value("preamble", std::string());
        tpl.answer_marker = j.value("answer_marker", std::string("Answer:"));
        if (j.contains("few_shot"))
            for (const auto& ex : j.at("few_shot"))
                tpl.few_shot.push_back({ex.at("text").get<std::string>(), ex.at("label").get<std::string>()});
        if (j.contains("labels")) {
            const auto& labels = j.at("labels");
            if (labels.size() != 8)
                throw ValidationError(file.string() + ": template needs exactly 8 labels");
            for (std::size_t i = 0; i < 8; ++i) tpl.labels[i] = labels[i].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ": " + e.what());
    }
    if (tpl.answer_marker.find(':') == std::string::npos)
        throw ValidationError(file.string() + ": answer marker must contain ':'");
    for (const auto& label : tpl.labels)
        if (label.empty()) throw ValidationError(file.string() + ": empty label string");
    return tpl;
}

PromptTemplate strip_few_shot(PromptTemplate t) {
    t.few_shot.clear();
    return t;
}

std::string render_prompt(const PromptTemplate& tpl, const Stimulus& target) {
    if (tpl.answer_marker.find(':') == std::string::npos)
        throw ValidationError("render_prompt: answer marker lacks ':'");
    if (target.text.empty()) throw ValidationError("render_prompt: empty target text");
    std::string out;
    if (!tpl.preamble.empty()) {
        out += tpl.preamble;
        out += "\n\n";
    }
    for (const auto& ex : tpl.few_shot) {
        out += ex.text;
        out += "\n";
        out += tpl.answer_marker;
        out += " ";
        out += ex.label;
        out += "\n\n";
    }
    out += target.text;
    out += "\n";
    out += tpl.answer_marker;
    return out;
}

std::uint64_t template_hash(const PromptTemplate& tpl) {
    std::uint64_t h = fnv1a(tpl.preamble);
    for (const auto& ex : tpl.few_shot) {
        h = fnv1a(ex.text, h);
        h = fnv1a(ex.label, h);
    }
    h = fnv1a(tpl.answer_marker, h);
    for (const auto& label : tpl.labels) h = fnv1a(label, h);
    return h;
}

}  // namespace emolab
