#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "diachron/error.hpp"

namespace diachron {

struct Token {
    std::string surface;
    std::size_t begin = 0;  // byte offsets into the normalized text
    std::size_t end = 0;
    std::size_t word_index = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

// Throws EncodingError at the first ill-formed sequence (overlongs,
// surrogates and code points above U+10FFFF are rejected).
inline void validate_utf8(std::string_view bytes) {
    const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
    const std::size_t n = bytes.size();
    std::size_t i = 0;
    while (i < n) {
        const uint8_t lead = s[i];
        std::size_t len = 0;
        uint32_t cp = 0;
        uint32_t min = 0;
        if (lead < 0x80) {
            ++i;
            continue;
        } else if ((lead & 0xE0) == 0xC0) {
            len = 2, cp = lead & 0x1F, min = 0x80;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3, cp = lead & 0x0F, min = 0x800;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4, cp = lead & 0x07, min = 0x10000;
        } else {
            throw EncodingError("invalid UTF-8 lead byte", i);
        }
        if (i + len > n) throw EncodingError("truncated UTF-8 sequence", i);
        for (std::size_t k = 1; k < len; ++k) {
            if ((s[i + k] & 0xC0) != 0x80) throw EncodingError("invalid UTF-8 continuation byte", i + k);
            cp = (cp << 6) | (s[i + k] & 0x3F);
        }
        if (cp < min) throw EncodingError("overlong UTF-8 encoding", i);
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) throw EncodingError("invalid code point in UTF-8", i);
        i += len;
    }
}

// Lowercase + NFC. Diacritics are kept; decomposed sequences are composed.
inline std::string normalize(std::string_view raw) {
    validate_utf8(raw);
    if (raw.empty()) return {};
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(status));

    icu::UnicodeString text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    icu::UnicodeString composed = nfc->normalize(text, status);
    composed.toLower(icu::Locale::getRoot());
    icu::UnicodeString out = nfc->normalize(composed, status);
    if (U_FAILURE(status)) throw Error(std::string("ICU normalization failed: ") + u_errorName(status));
    std::string result;
    out.toUTF8String(result);
    return result;
}

// Letters and combining marks form words. The apostrophe (ASCII or U+2019)
// transliterates avagraha and stays inside a word.
inline bool is_word_code_point(UChar32 c) {
    if (c == 0x27 || c == 0x2019) return true;
    return (U_GET_GC_MASK(c) & (U_GC_L_MASK | U_GC_M_MASK)) != 0;
}

inline bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019; }

// Maximal runs of word code points; everything else separates. Runs made
// only of apostrophes are not words.
inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto n = static_cast<int32_t>(text.size());
    int32_t i = 0;
    int32_t start = -1;
    bool has_letter = false;
    auto flush = [&](int32_t end) {
        if (start >= 0 && has_letter) {
            tokens.push_back(Token{std::string(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(end - start))),
                                   static_cast<std::size_t>(start), static_cast<std::size_t>(end), tokens.size()});
        }
        start = -1;
        has_letter = false;
    };
    while (i < n) {
        const int32_t at = i;
        UChar32 c = 0;
        U8_NEXT(s, i, n, c);
        if (c >= 0 && is_word_code_point(c)) {
            if (start < 0) start = at;
            if (!is_apostrophe(c)) has_letter = true;
        } else {
            flush(at);
        }
    }
    flush(n);
    return tokens;
}

}  // namespace diachron
