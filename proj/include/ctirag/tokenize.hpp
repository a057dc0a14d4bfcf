#pragma once
// Whitespace tokenizer shared by the sparse index and the test embedder.
// Lowercases, splits on Unicode whitespace, and strips leading/trailing
// punctuation while keeping hyphens, so identifiers like CVE-2024-5022
// survive intact.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "ctirag/utf8.hpp"

namespace ctirag {

using TokenList = std::vector<std::string>;

namespace detail {

inline bool is_strippable_punct(char32_t cp) {
    if (cp == U'-') return false;
    return cp < 0x80 && std::ispunct(static_cast<int>(cp));
}

} // namespace detail

inline TokenList tokenize(std::string_view text) {
    TokenList tokens;
    std::string current;
    std::size_t pos = 0;

    auto flush = [&] {
        if (current.empty()) return;
        // Trim punctuation (except hyphens) off both ends.
        std::size_t begin = 0;
        while (begin < current.size()) {
            auto d = utf8::decode_at(current, begin);
            if (!detail::is_strippable_punct(d.cp)) break;
            begin += d.len;
        }
        std::size_t end = current.size();
        while (end > begin) {
            // Walk back one scalar from `end`.
            std::size_t prev = end - 1;
            while (prev > begin &&
                   (static_cast<unsigned char>(current[prev]) & 0xC0) == 0x80) {
                --prev;
            }
            auto d = utf8::decode_at(current, prev);
            if (prev + d.len != end || !detail::is_strippable_punct(d.cp)) break;
            end = prev;
        }
        if (end > begin) tokens.emplace_back(current.substr(begin, end - begin));
        current.clear();
    };

    while (pos < text.size()) {
        auto d = utf8::decode_at(text, pos);
        if (utf8::is_space(d.cp)) {
            flush();
        } else if (d.cp < 0x80) {
            current.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[pos]))));
        } else {
            current.append(text.substr(pos, d.len));
        }
        pos += d.len;
    }
    flush();
    return tokens;
}

} // namespace ctirag
