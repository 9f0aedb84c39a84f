#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/error.hpp"
#include "diachron/io.hpp"

namespace diachron {

enum class Category { Phonological, Morphological, Syntactic, Lexical, Stylistic };

inline constexpr std::array<Category, 5> kAllCategories{Category::Phonological, Category::Morphological,
                                                       Category::Syntactic, Category::Lexical, Category::Stylistic};

inline std::string_view to_string(Category c) {
    switch (c) {
        case Category::Phonological: return "Phonological";
        case Category::Morphological: return "Morphological";
        case Category::Syntactic: return "Syntactic";
        case Category::Lexical: return "Lexical";
        case Category::Stylistic: return "Stylistic";
    }
    return "";
}

inline std::optional<Category> parse_category(std::string_view name) {
    for (Category c : kAllCategories)
        if (to_string(c) == name) return c;
    return std::nullopt;
}

enum class Method { Regex, Neural, Ensemble };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::Regex: return "regex";
        case Method::Neural: return "neural";
        case Method::Ensemble: return "ensemble";
    }
    return "";
}

// Per-feature, per-text frequencies (occurrences per 1,000 words).
// Cells are indexed [feature][text]; texts are in chronological order.
struct FeatureMatrix {
    Method method = Method::Regex;
    std::vector<std::string> texts;
    std::vector<Period> periods;            // one per text
    std::vector<std::size_t> token_counts;  // one per text
    std::vector<std::string> features;
    std::vector<Category> categories;  // one per feature
    std::vector<std::vector<double>> freq;
    std::vector<std::vector<bool>> detected;
    std::vector<std::vector<std::size_t>> counts;  // retained matches; regex only

    std::size_t num_features() const noexcept { return features.size(); }
    std::size_t num_texts() const noexcept { return texts.size(); }

    std::size_t detection_count() const {
        std::size_t n = 0;
        for (const auto& row : detected)
            for (bool d : row) n += d ? 1 : 0;
        return n;
    }

    std::optional<std::size_t> feature_index(std::string_view id) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i] == id) return i;
        return std::nullopt;
    }
};

// Empty matrix over the given text/feature universes.
inline FeatureMatrix make_matrix(Method method, const std::vector<TextDocument>& corpus,
                                 std::vector<std::string> features, std::vector<Category> categories) {
    FeatureMatrix m;
    m.method = method;
    for (const auto& d : corpus) {
        m.texts.push_back(d.id);
        m.periods.push_back(d.period);
        m.token_counts.push_back(d.word_count());
    }
    m.features = std::move(features);
    m.categories = std::move(categories);
    m.freq.assign(m.features.size(), std::vector<double>(m.texts.size(), 0.0));
    m.detected.assign(m.features.size(), std::vector<bool>(m.texts.size(), false));
    m.counts.assign(m.features.size(), std::vector<std::size_t>(m.texts.size(), 0));
    return m;
}

inline std::string matrix_to_csv(const FeatureMatrix& m, std::string_view provenance = {}) {
    std::string out;
    if (!provenance.empty()) out += "# " + std::string(provenance) + "\n";
    std::vector<std::string> header{"feature_id"};
    header.insert(header.end(), m.texts.begin(), m.texts.end());
    out += csv_row(header);
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        std::vector<std::string> row{m.features[f]};
        for (double v : m.freq[f]) row.push_back(format_double(v));
        out += csv_row(row);
    }
    return out;
}

inline json matrix_to_json(const FeatureMatrix& m) {
    json j;
    j["method"] = std::string(to_string(m.method));
    json texts = json::array();
    for (std::size_t t = 0; t < m.num_texts(); ++t) {
        texts.push_back({{"id", m.texts[t]},
                         {"period", std::string(to_string(m.periods[t]))},
                         {"token_count", m.token_counts[t]}});
    }
    j["texts"] = std::move(texts);
    json features = json::array();
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        json row;
        row["id"] = m.features[f];
        row["category"] = std::string(to_string(m.categories[f]));
        json freq = json::array(), det = json::array(), cnt = json::array();
        for (std::size_t t = 0; t < m.num_texts(); ++t) {
            freq.push_back(json_number(m.freq[f][t]));
            det.push_back(static_cast<bool>(m.detected[f][t]));
            cnt.push_back(m.counts[f][t]);
        }
        row["frequency"] = std::move(freq);
        row["detected"] = std::move(det);
        row["match_counts"] = std::move(cnt);
        features.push_back(std::move(row));
    }
    j["features"] = std::move(features);
    j["detections"] = m.detection_count();
    return j;
}

inline FeatureMatrix matrix_from_json(const json& j) {
    try {
        FeatureMatrix m;
        const auto method = j.at("method").get<std::string>();
        if (method == "regex") m.method = Method::Regex;
        else if (method == "neural") m.method = Method::Neural;
        else if (method == "ensemble") m.method = Method::Ensemble;
        else throw LoadError("unknown matrix method '" + method + "'");
        for (const auto& t : j.at("texts")) {
            m.texts.push_back(t.at("id").get<std::string>());
            auto p = parse_period(t.at("period").get<std::string>());
            if (!p) throw LoadError("invalid period in matrix text '" + m.texts.back() + "'");
            m.periods.push_back(*p);
            m.token_counts.push_back(t.at("token_count").get<std::size_t>());
        }
        for (const auto& f : j.at("features")) {
            m.features.push_back(f.at("id").get<std::string>());
            auto c = parse_category(f.at("category").get<std::string>());
            if (!c) throw LoadError("invalid category for feature '" + m.features.back() + "'");
            m.categories.push_back(*c);
            std::vector<double> freq;
            std::vector<bool> det;
            std::vector<std::size_t> cnt;
            for (const auto& v : f.at("frequency")) freq.push_back(v.get<double>());
            for (const auto& v : f.at("detected")) det.push_back(v.get<bool>());
            for (const auto& v : f.at("match_counts")) cnt.push_back(v.get<std::size_t>());
            if (freq.size() != m.texts.size() || det.size() != m.texts.size() || cnt.size() != m.texts.size())
                throw LoadError("feature '" + m.features.back() + "' row length does not match text count");
            m.freq.push_back(std::move(freq));
            m.detected.push_back(std::move(det));
            m.counts.push_back(std::move(cnt));
        }
        return m;
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed feature matrix: ") + e.what());
    }
}

}  // namespace diachron
