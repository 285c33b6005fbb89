#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emolab {

// Byte-level tokenizer: 256 byte symbols plus begin-of-text and pad.
// decode(encode(s)) == s for any byte string, and encoding is a pure
// function of the input.
class ByteTokenizer {
public:
    static constexpr int kBos = 256;
    static constexpr int kPad = 257;
    static constexpr int kVocab = 258;

    std::vector<int> encode(std::string_view text) const {
        std::vector<int> out;
        out.reserve(text.size() + 1);
        out.push_back(kBos);
        for (unsigned char c : text) out.push_back(static_cast<int>(c));
        return out;
    }

    std::string decode(std::span<const int> tokens) const {
        std::string out;
        out.reserve(tokens.size());
        for (int t : tokens)
            if (t >= 0 && t < 256) out.push_back(static_cast<char>(t));
        return out;
    }

    // single-token text; specials decode to marker strings
    std::string token_text(int token) const {
        if (token == kBos) return "<bot>";
        if (token == kPad) return "<pad>";
        if (token >= 0 && token < 256) return std::string(1, static_cast<char>(token));
        return "<bad>";
    }

    int first_token_of(std::string_view text) const {
        if (text.empty()) return kPad;
        return static_cast<int>(static_cast<unsigned char>(text[0]));
    }
};

// Index of the last token whose decoded text contains ':' (the colon
// closing the answer marker). Returns -1 if no such token exists.
inline int find_extraction_index(std::span<const int> tokens) {
    for (int i = static_cast<int>(tokens.size()) - 1; i >= 0; --i)
        if (tokens[static_cast<std::size_t>(i)] == static_cast<int>(':')) return i;
    return -1;
}

}  // namespace emolab
