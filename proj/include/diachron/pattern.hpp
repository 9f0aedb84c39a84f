#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <unicode/regex.h>
#include <unicode/unistr.h>

#include "diachron/corpus.hpp"
#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"

namespace diachron {

inline constexpr double kBaseConfidence = 0.6;
inline constexpr double kPositiveBonus = 0.2;
inline constexpr double kNegativePenalty = 0.3;
inline constexpr double kMinConfidence = 0.1;
inline constexpr double kMaxConfidence = 0.95;
inline constexpr double kRetentionThreshold = 0.4;
inline constexpr std::size_t kDefaultWindow = 20;

// clamp_[0.1, 0.95](0.6 + 0.2 * positives - 0.3 * negatives)
inline double match_confidence(std::size_t positives_matched, std::size_t negatives_matched) noexcept {
    const double raw = kBaseConfidence + kPositiveBonus * static_cast<double>(positives_matched) -
                       kNegativePenalty * static_cast<double>(negatives_matched);
    return std::clamp(raw, kMinConfidence, kMaxConfidence);
}

inline bool is_retained(double confidence) noexcept { return confidence >= kRetentionThreshold; }

struct FeaturePattern {
    std::string feature_id;
    Category category = Category::Morphological;
    std::string base_regex;
    std::vector<std::string> positive_contexts;
    std::vector<std::string> negative_contexts;
    std::string description;
};

namespace detail {

inline std::shared_ptr<const icu::RegexPattern> compile_regex(const std::string& source, const std::string& feature_id,
                                                              const char* role) {
    UErrorCode status = U_ZERO_ERROR;
    UParseError parse_error{};
    const auto pattern_text = icu::UnicodeString::fromUTF8(source);
    std::shared_ptr<const icu::RegexPattern> compiled(icu::RegexPattern::compile(pattern_text, 0, parse_error, status));
    if (U_FAILURE(status) || !compiled) {
        throw CatalogError("feature '" + feature_id + "': " + role + " regex '" + source + "' does not compile (" +
                           u_errorName(status) + " at offset " + std::to_string(parse_error.offset) + ")");
    }
    return compiled;
}

}  // namespace detail

// A FeaturePattern with its regexes compiled. Immutable and safe to share.
class CompiledPattern {
public:
    explicit CompiledPattern(FeaturePattern spec) : spec_(std::move(spec)) {
        if (spec_.feature_id.empty()) throw CatalogError("pattern with empty feature_id");
        base_ = detail::compile_regex(spec_.base_regex, spec_.feature_id, "base");
        for (const auto& src : spec_.positive_contexts)
            positive_.push_back(detail::compile_regex(src, spec_.feature_id, "positive context"));
        for (const auto& src : spec_.negative_contexts)
            negative_.push_back(detail::compile_regex(src, spec_.feature_id, "negative context"));
    }

    const FeaturePattern& spec() const noexcept { return spec_; }
    const std::string& id() const noexcept { return spec_.feature_id; }

    // Anchored: the base regex has to cover the whole word.
    bool matches_word(const icu::UnicodeString& word) const {
        UErrorCode status = U_ZERO_ERROR;
        std::unique_ptr<icu::RegexMatcher> m(base_->matcher(word, status));
        const bool hit = m->matches(status);
        check(status);
        return hit;
    }

    std::size_t count_positive(const icu::UnicodeString& window) const { return count_present(positive_, window); }
    std::size_t count_negative(const icu::UnicodeString& window) const { return count_present(negative_, window); }

private:
    void check(UErrorCode status) const {
        if (U_FAILURE(status))
            throw CatalogError("feature '" + spec_.feature_id + "': regex evaluation failed (" + u_errorName(status) + ")");
    }

    // Each context regex counts once if it occurs anywhere in the window.
    std::size_t count_present(const std::vector<std::shared_ptr<const icu::RegexPattern>>& patterns,
                              const icu::UnicodeString& window) const {
        std::size_t n = 0;
        for (const auto& p : patterns) {
            UErrorCode status = U_ZERO_ERROR;
            std::unique_ptr<icu::RegexMatcher> m(p->matcher(window, status));
            if (m->find(status)) ++n;
            check(status);
        }
        return n;
    }

    FeaturePattern spec_;
    std::shared_ptr<const icu::RegexPattern> base_;
    std::vector<std::shared_ptr<const icu::RegexPattern>> positive_;
    std::vector<std::shared_ptr<const icu::RegexPattern>> negative_;
};

struct PatternCatalog {
    std::string version;
    std::vector<CompiledPattern> patterns;

    std::map<Category, std::size_t> category_counts() const {
        std::map<Category, std::size_t> counts;
        for (Category c : kAllCategories) counts[c] = 0;
        for (const auto& p : patterns) ++counts[p.spec().category];
        return counts;
    }

    std::vector<std::string> feature_ids() const {
        std::vector<std::string> ids;
        for (const auto& p : patterns) ids.push_back(p.id());
        return ids;
    }

    std::vector<Category> feature_categories() const {
        std::vector<Category> cats;
        for (const auto& p : patterns) cats.push_back(p.spec().category);
        return cats;
    }
};

inline PatternCatalog make_catalog(std::string version, std::vector<FeaturePattern> patterns) {
    PatternCatalog catalog{std::move(version), {}};
    std::set<std::string> seen;
    for (auto& p : patterns) {
        if (!seen.insert(p.feature_id).second) throw CatalogError("duplicate feature_id '" + p.feature_id + "'");
        catalog.patterns.emplace_back(std::move(p));
    }
    return catalog;
}

inline json pattern_to_json(const FeaturePattern& p) {
    return json{{"feature_id", p.feature_id},
                {"category", std::string(to_string(p.category))},
                {"base_regex", p.base_regex},
                {"positive_contexts", p.positive_contexts},
                {"negative_contexts", p.negative_contexts},
                {"description", p.description}};
}

inline json catalog_to_json(const PatternCatalog& catalog) {
    json counts = json::object();
    for (const auto& [c, n] : catalog.category_counts()) counts[std::string(to_string(c))] = n;
    json patterns = json::array();
    for (const auto& p : catalog.patterns) patterns.push_back(pattern_to_json(p.spec()));
    return json{{"version", catalog.version}, {"category_counts", counts}, {"patterns", patterns}};
}

// Fails fast on malformed entries, invalid regexes, duplicate ids and
// declared category counts that disagree with the patterns.
inline PatternCatalog parse_catalog(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw CatalogError(origin + ": catalog must be a JSON object");
    std::vector<FeaturePattern> patterns;
    std::string version;
    try {
        version = doc.at("version").get<std::string>();
        for (const auto& e : doc.at("patterns")) {
            FeaturePattern p;
            p.feature_id = e.at("feature_id").get<std::string>();
            const auto cat = e.at("category").get<std::string>();
            auto category = parse_category(cat);
            if (!category) throw CatalogError(origin + ": feature '" + p.feature_id + "': unknown category '" + cat + "'");
            p.category = *category;
            p.base_regex = e.at("base_regex").get<std::string>();
            p.positive_contexts = e.value("positive_contexts", std::vector<std::string>{});
            p.negative_contexts = e.value("negative_contexts", std::vector<std::string>{});
            p.description = e.value("description", std::string{});
            patterns.push_back(std::move(p));
        }
    } catch (const json::exception& ex) {
        throw CatalogError(origin + ": malformed catalog: " + ex.what());
    }
    PatternCatalog catalog;
    try {
        catalog = make_catalog(std::move(version), std::move(patterns));
    } catch (const CatalogError& ex) {
        throw CatalogError(origin + ": " + ex.what());
    }
    if (doc.contains("category_counts")) {
        const auto actual = catalog.category_counts();
        for (const auto& [name, declared] : doc["category_counts"].items()) {
            auto c = parse_category(name);
            if (!c) throw CatalogError(origin + ": category_counts: unknown category '" + name + "'");
            if (declared.get<std::size_t>() != actual.at(*c)) {
                throw CatalogError(origin + ": category_counts declares " + std::to_string(declared.get<std::size_t>()) +
                                   " " + name + " features but the catalog has " + std::to_string(actual.at(*c)));
            }
        }
    }
    return catalog;
}

inline PatternCatalog load_catalog(const std::filesystem::path& path) {
    json doc;
    try {
        doc = read_json(path);
    } catch (const LoadError& e) {
        throw CatalogError(e.what());
    }
    return parse_catalog(doc, path.string());
}

struct FeatureMatch {
    std::string feature_id;
    std::string text_id;
    std::size_t word_index = 0;
    std::string matched_surface;
    double confidence = 0.0;
    std::size_t positives_matched = 0;
    std::size_t negatives_matched = 0;
    std::string context;  // window tokens joined by single spaces
};

// Tokens at word distance <= window from `center`, joined by single spaces.
inline std::string window_text(const std::vector<Token>& tokens, std::size_t center, std::size_t window) {
    const std::size_t lo = center > window ? center - window : 0;
    const std::size_t hi = std::min(tokens.size() - 1, center + window);
    std::string out;
    for (std::size_t j = lo; j <= hi; ++j) {
        if (j != lo) out += ' ';
        out += tokens[j].surface;
    }
    return out;
}

namespace detail {

// Evaluates every pattern's base regex once per distinct surface, then walks
// tokens in order and emits retained matches (catalog order within a word).
template <typename Sink>
void scan_document(const TextDocument& doc, const std::vector<const CompiledPattern*>& patterns, std::size_t window,
                   Sink&& sink) {
    if (doc.tokens.empty() || patterns.empty()) return;
    std::unordered_map<std::string, std::vector<bool>> surface_hits;
    for (const auto& tok : doc.tokens) {
        auto [it, inserted] = surface_hits.try_emplace(tok.surface);
        if (!inserted) continue;
        const auto word = icu::UnicodeString::fromUTF8(tok.surface);
        it->second.reserve(patterns.size());
        for (const auto* p : patterns) it->second.push_back(p->matches_word(word));
    }
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        const auto& hits = surface_hits.at(doc.tokens[i].surface);
        if (std::find(hits.begin(), hits.end(), true) == hits.end()) continue;
        const std::string context = window_text(doc.tokens, i, window);
        const auto context_u = icu::UnicodeString::fromUTF8(context);
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            if (!hits[k]) continue;
            const auto pos = patterns[k]->count_positive(context_u);
            const auto neg = patterns[k]->count_negative(context_u);
            const double confidence = match_confidence(pos, neg);
            if (!is_retained(confidence)) continue;
            sink(k, FeatureMatch{patterns[k]->id(), doc.id, i, doc.tokens[i].surface, confidence, pos, neg, context});
        }
    }
}

inline std::vector<const CompiledPattern*> pattern_pointers(const PatternCatalog& catalog) {
    std::vector<const CompiledPattern*> out;
    for (const auto& p : catalog.patterns) out.push_back(&p);
    return out;
}

}  // namespace detail

// Retained matches of one pattern in one document, in word order.
inline std::vector<FeatureMatch> scan_text(const TextDocument& doc, const CompiledPattern& pattern,
                                           std::size_t window = kDefaultWindow) {
    std::vector<FeatureMatch> out;
    detail::scan_document(doc, {&pattern}, window, [&](std::size_t, FeatureMatch m) { out.push_back(std::move(m)); });
    return out;
}

// All retained matches of a catalog over a document, ordered by
// (word_index, catalog order).
inline std::vector<FeatureMatch> scan_document(const TextDocument& doc, const PatternCatalog& catalog,
                                               std::size_t window = kDefaultWindow) {
    std::vector<FeatureMatch> out;
    detail::scan_document(doc, detail::pattern_pointers(catalog), window,
                          [&](std::size_t, FeatureMatch m) { out.push_back(std::move(m)); });
    return out;
}

// 1000 * count / tokens, evaluated in that order so that equal ratios give
// bitwise-equal frequencies.
inline double per_thousand(std::size_t count, std::size_t tokens) noexcept {
    if (tokens == 0) return 0.0;
    return 1000.0 * static_cast<double>(count) / static_cast<double>(tokens);
}

inline FeatureMatrix detect_all(const std::vector<TextDocument>& corpus, const PatternCatalog& catalog,
                                std::size_t window = kDefaultWindow, const WarningSink& warnings = {}) {
    FeatureMatrix m = make_matrix(Method::Regex, corpus, catalog.feature_ids(), catalog.feature_categories());
    const auto patterns = detail::pattern_pointers(catalog);
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        const auto& doc = corpus[t];
        if (doc.tokens.empty()) {
            warn(warnings, "text '" + doc.id + "' has zero tokens; its feature frequencies are 0");
            continue;
        }
        detail::scan_document(doc, patterns, window, [&](std::size_t k, const FeatureMatch&) { ++m.counts[k][t]; });
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            m.freq[k][t] = per_thousand(m.counts[k][t], doc.tokens.size());
            m.detected[k][t] = m.counts[k][t] > 0;
        }
    }
    return m;
}

}  // namespace diachron
