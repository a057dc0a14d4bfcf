#pragma once
// Minimal UTF-8 scanning: scalar boundaries and character classification.
// Chunk sizes and offsets are counted in Unicode scalar values, not bytes,
// so all slicing goes through the boundary table produced here. An invalid
// byte is treated as a single one-byte scalar, which keeps slicing lossless
// on arbitrary input.

#include <cstdint>
#include <string_view>
#include <vector>

namespace ctirag::utf8 {

inline constexpr char32_t kInvalid = 0xFFFFFFFF;

struct Decoded {
    char32_t cp;     // kInvalid for malformed sequences
    std::size_t len; // bytes consumed, >= 1
};

inline Decoded decode_at(std::string_view text, std::size_t pos) {
    const auto byte = [&](std::size_t i) {
        return static_cast<unsigned char>(text[i]);
    };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) return {b0, 1};

    auto cont = [&](std::size_t i) {
        return i < text.size() && (byte(i) & 0xC0) == 0x80;
    };

    if ((b0 & 0xE0) == 0xC0) {
        if (!cont(pos + 1)) return {kInvalid, 1};
        char32_t cp = ((b0 & 0x1Fu) << 6) | (byte(pos + 1) & 0x3Fu);
        if (cp < 0x80) return {kInvalid, 1}; // overlong
        return {cp, 2};
    }
    if ((b0 & 0xF0) == 0xE0) {
        if (!cont(pos + 1) || !cont(pos + 2)) return {kInvalid, 1};
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(pos + 1) & 0x3Fu) << 6) |
                      (byte(pos + 2) & 0x3Fu);
        if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) return {kInvalid, 1};
        return {cp, 3};
    }
    if ((b0 & 0xF8) == 0xF0) {
        if (!cont(pos + 1) || !cont(pos + 2) || !cont(pos + 3)) return {kInvalid, 1};
        char32_t cp = ((b0 & 0x07u) << 18) | ((byte(pos + 1) & 0x3Fu) << 12) |
                      ((byte(pos + 2) & 0x3Fu) << 6) | (byte(pos + 3) & 0x3Fu);
        if (cp < 0x10000 || cp > 0x10FFFF) return {kInvalid, 1};
        return {cp, 4};
    }
    return {kInvalid, 1};
}

// Byte offset of every scalar start, plus a final sentinel equal to
// text.size(). Slicing between entries i and j yields exactly the bytes of
// scalars [i, j).
inline std::vector<std::size_t> scalar_starts(std::string_view text) {
    std::vector<std::size_t> starts;
    starts.reserve(text.size() + 1);
    std::size_t pos = 0;
    while (pos < text.size()) {
        starts.push_back(pos);
        pos += decode_at(text, pos).len;
    }
    starts.push_back(text.size());
    return starts;
}

inline std::size_t scalar_count(std::string_view text) {
    std::size_t n = 0, pos = 0;
    while (pos < text.size()) {
        pos += decode_at(text, pos).len;
        ++n;
    }
    return n;
}

inline bool is_space(char32_t cp) {
    switch (cp) {
        case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
        case 0x0085: case 0x00A0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

} // namespace ctirag::utf8
