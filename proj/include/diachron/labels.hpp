#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/io.hpp"
#include "diachron/pattern.hpp"

namespace diachron {

struct WeakLabel {
    std::string text_id;
    std::size_t word_index = 0;
    std::string word;
    std::string context;
    std::string feature_id;
    double confidence = 0.0;

    friend bool operator==(const WeakLabel&, const WeakLabel&) = default;
};

struct LabelSet {
    std::vector<WeakLabel> labels;
    std::string catalog_version;
    std::string corpus_hash;
    // feature_id -> column of the multi-hot training target (catalog order)
    std::vector<std::string> feature_columns;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// One label per retained match, ordered by (chrono_index, word_index, feature_id).
inline LabelSet generate_labels(const std::vector<TextDocument>& corpus, const PatternCatalog& catalog,
                                std::size_t window = kDefaultWindow) {
    LabelSet set;
    set.catalog_version = catalog.version;
    set.corpus_hash = corpus_hash(corpus);
    set.feature_columns = catalog.feature_ids();

    std::vector<const TextDocument*> ordered;
    for (const auto& d : corpus) ordered.push_back(&d);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const TextDocument* a, const TextDocument* b) { return a->chrono_index < b->chrono_index; });

    for (const auto* doc : ordered) {
        auto matches = scan_document(*doc, catalog, window);
        std::stable_sort(matches.begin(), matches.end(), [](const FeatureMatch& a, const FeatureMatch& b) {
            return std::tie(a.word_index, a.feature_id) < std::tie(b.word_index, b.feature_id);
        });
        for (auto& m : matches) {
            set.labels.push_back(WeakLabel{m.text_id, m.word_index, std::move(m.matched_surface), std::move(m.context),
                                           m.feature_id, m.confidence});
        }
    }
    return set;
}

inline std::filesystem::path label_header_path(const std::filesystem::path& labels_path) {
    auto header = labels_path;
    header.replace_extension(".header.json");
    return header;
}

inline json label_to_json(const WeakLabel& l) {
    return json{{"text_id", l.text_id}, {"word_index", l.word_index}, {"word", l.word},
                {"context", l.context}, {"feature_id", l.feature_id}, {"confidence", l.confidence}};
}

inline json label_header(const LabelSet& set) {
    json columns = json::object();
    std::map<std::string, std::size_t> counts;
    for (const auto& l : set.labels) ++counts[l.feature_id];
    json per_feature = json::object();
    for (std::size_t i = 0; i < set.feature_columns.size(); ++i) {
        columns[set.feature_columns[i]] = i;
        per_feature[set.feature_columns[i]] = counts[set.feature_columns[i]];
    }
    return json{{"format", "diachron-weak-labels/1"},
                {"catalog_version", set.catalog_version},
                {"corpus_hash", set.corpus_hash},
                {"label_count", set.labels.size()},
                {"feature_columns", columns},
                {"labels_per_feature", per_feature}};
}

// JSON-Lines, one label per line, plus a header sidecar with the
// feature -> column map for multi-hot targets.
inline void export_labels(const LabelSet& set, const std::filesystem::path& path) {
    std::string body;
    for (const auto& l : set.labels) body += label_to_json(l).dump() + "\n";
    write_file(path, body);
    write_json(label_header_path(path), label_header(set));
}

inline LabelSet import_labels(const std::filesystem::path& path) {
    LabelSet set;
    const json header = read_json(label_header_path(path));
    try {
        set.catalog_version = header.at("catalog_version").get<std::string>();
        set.corpus_hash = header.at("corpus_hash").get<std::string>();
        const auto& columns = header.at("feature_columns");
        set.feature_columns.assign(columns.size(), {});
        for (const auto& [id, col] : columns.items()) {
            const auto c = col.get<std::size_t>();
            if (c >= set.feature_columns.size()) throw LoadError(path.string() + ": feature column out of range");
            set.feature_columns[c] = id;
        }
        for (const auto& j : parse_json_lines(read_file(path), path.string())) {
            set.labels.push_back(WeakLabel{j.at("text_id").get<std::string>(), j.at("word_index").get<std::size_t>(),
                                           j.at("word").get<std::string>(), j.at("context").get<std::string>(),
                                           j.at("feature_id").get<std::string>(), j.at("confidence").get<double>()});
        }
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": malformed label file: " + e.what());
    }
    if (set.labels.size() != header.at("label_count").get<std::size_t>())
        throw LoadError(path.string() + ": label count does not match header");
    return set;
}

}  // namespace diachron
