#pragma once

// Naive reference scanner. Re-tokenizes with its own code-unit walk and
// re-evaluates every (word, pattern) pair with no caching. Shares only the
// regex engine with the production scanner.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <unicode/regex.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "diachron/corpus.hpp"
#include "diachron/error.hpp"
#include "diachron/pattern.hpp"

namespace diachron::oracle {

struct BruteMatch {
    std::string text_id;
    std::string feature_id;
    std::size_t word_index = 0;
    double confidence = 0.0;

    auto key() const { return std::tie(text_id, feature_id, word_index); }
    friend bool operator<(const BruteMatch& a, const BruteMatch& b) { return a.key() < b.key(); }
    friend bool operator==(const BruteMatch& a, const BruteMatch& b) {
        return a.key() == b.key() && a.confidence == b.confidence;
    }
};

inline std::vector<icu::UnicodeString> brute_tokens(const std::string& normalized) {
    const auto text = icu::UnicodeString::fromUTF8(normalized);
    std::vector<icu::UnicodeString> words;
    icu::UnicodeString current;
    bool letter_seen = false;
    for (int32_t i = 0; i < text.length();) {
        const UChar32 c = text.char32At(i);
        i += U16_LENGTH(c);
        const int8_t type = u_charType(c);
        const bool letter = type == U_UPPERCASE_LETTER || type == U_LOWERCASE_LETTER || type == U_TITLECASE_LETTER ||
                            type == U_MODIFIER_LETTER || type == U_OTHER_LETTER;
        const bool mark = type == U_NON_SPACING_MARK || type == U_ENCLOSING_MARK || type == U_COMBINING_SPACING_MARK;
        const bool apostrophe = c == 0x0027 || c == 0x2019;
        if (letter || mark || apostrophe) {
            current.append(c);
            if (!apostrophe) letter_seen = true;
        } else {
            if (letter_seen) words.push_back(current);
            current.remove();
            letter_seen = false;
        }
    }
    if (letter_seen) words.push_back(current);
    return words;
}

// All retained (text, feature, word) matches, sorted by key.
inline std::vector<BruteMatch> brute_scan(const std::vector<TextDocument>& corpus,
                                          const std::vector<FeaturePattern>& catalog, std::size_t window) {
    struct Compiled {
        std::unique_ptr<icu::RegexMatcher> base;
        std::vector<std::unique_ptr<icu::RegexMatcher>> positive, negative;
    };
    auto compile = [](const std::string& src) {
        UErrorCode status = U_ZERO_ERROR;
        std::unique_ptr<icu::RegexMatcher> m(new icu::RegexMatcher(icu::UnicodeString::fromUTF8(src), 0, status));
        if (U_FAILURE(status)) throw CatalogError("oracle: regex '" + src + "' does not compile");
        return m;
    };
    std::vector<Compiled> compiled;
    for (const auto& p : catalog) {
        Compiled c;
        c.base = compile(p.base_regex);
        for (const auto& s : p.positive_contexts) c.positive.push_back(compile(s));
        for (const auto& s : p.negative_contexts) c.negative.push_back(compile(s));
        compiled.push_back(std::move(c));
    }

    std::vector<BruteMatch> out;
    for (const auto& doc : corpus) {
        const auto words = brute_tokens(doc.text);
        for (std::size_t i = 0; i < words.size(); ++i) {
            for (std::size_t k = 0; k < catalog.size(); ++k) {
                UErrorCode status = U_ZERO_ERROR;
                compiled[k].base->reset(words[i]);
                if (!compiled[k].base->matches(status)) continue;

                icu::UnicodeString context;
                bool first = true;
                const std::size_t lo = i >= window ? i - window : 0;
                for (std::size_t j = lo; j < words.size() && j <= i + window; ++j) {
                    if (!first) context.append(static_cast<UChar>(' '));
                    context.append(words[j]);
                    first = false;
                }
                std::size_t pos = 0, neg = 0;
                for (auto& m : compiled[k].positive) {
                    m->reset(context);
                    if (m->find()) ++pos;
                }
                for (auto& m : compiled[k].negative) {
                    m->reset(context);
                    if (m->find()) ++neg;
                }
                const double conf = std::min(0.95, std::max(0.1, 0.6 + 0.2 * static_cast<double>(pos) -
                                                                       0.3 * static_cast<double>(neg)));
                if (conf < 0.4) continue;
                out.push_back(BruteMatch{doc.id, catalog[k].feature_id, i, conf});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace diachron::oracle
