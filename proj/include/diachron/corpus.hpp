#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "diachron/digest.hpp"
#include "diachron/error.hpp"
#include "diachron/io.hpp"
#include "diachron/text.hpp"

namespace diachron {

using WarningSink = std::function<void(const std::string&)>;

inline void warn(const WarningSink& sink, const std::string& message) {
    if (sink) sink(message);
}

enum class Period { EarlyVedic, LateVedic, LatestVedic, Classical };

inline constexpr std::array<Period, 4> kAllPeriods{Period::EarlyVedic, Period::LateVedic, Period::LatestVedic,
                                                   Period::Classical};

struct PeriodInfo {
    std::string_view key;
    std::string_view display_name;
    std::string_view date_range;
};

inline constexpr PeriodInfo period_info(Period p) {
    switch (p) {
        case Period::EarlyVedic: return {"EarlyVedic", "Early Vedic (Samhitas)", "1500-1000 BCE"};
        case Period::LateVedic: return {"LateVedic", "Late Vedic (Brahmanas)", "1000-700 BCE"};
        case Period::LatestVedic: return {"LatestVedic", "Latest Vedic (Upanishads)", "700-300 BCE"};
        case Period::Classical: return {"Classical", "Classical", "300 BCE-500 CE"};
    }
    return {"", "", ""};
}

inline std::string_view to_string(Period p) { return period_info(p).key; }

// Accepts "EarlyVedic", "early_vedic", "early-vedic", "Early Vedic" (any case).
inline std::optional<Period> parse_period(std::string_view name) {
    std::string folded;
    for (char c : name) {
        if (c == '_' || c == '-' || c == ' ') continue;
        folded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    for (Period p : kAllPeriods) {
        std::string key;
        for (char c : period_info(p).key) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (key == folded) return p;
    }
    return std::nullopt;
}

struct TextDocument {
    std::string id;
    std::string title;
    Period period = Period::EarlyVedic;
    std::size_t chrono_index = 0;
    std::string raw;
    std::string text;  // normalize(raw)
    std::vector<Token> tokens;

    std::size_t word_count() const noexcept { return tokens.size(); }
};

// Builds a document, normalizing and tokenizing the raw text.
inline TextDocument make_document(std::string id, std::string title, Period period, std::size_t chrono_index,
                                  std::string raw) {
    TextDocument doc{std::move(id), std::move(title), period, chrono_index, std::move(raw), {}, {}};
    doc.text = normalize(doc.raw);
    doc.tokens = tokenize(doc.text);
    return doc;
}

struct ManifestEntry {
    std::string id;
    std::string title;
    Period period = Period::EarlyVedic;
    std::size_t chrono_index = 0;
    std::filesystem::path file_path;
    std::optional<std::size_t> expected_word_count;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    // Optional per-period word totals checked after loading (same tolerance as
    // expected_word_count).
    std::map<Period, std::size_t> period_word_totals;
};

inline constexpr double kWordCountTolerance = 0.005;

// Relative file paths resolve against base_dir (normally the manifest's directory).
inline CorpusManifest parse_manifest(const json& doc, const std::filesystem::path& base_dir, const std::string& origin) {
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw LoadError(origin + ": manifest must be an object with an \"entries\" array");
    CorpusManifest manifest;
    std::size_t position = 0;
    for (const auto& e : doc["entries"]) {
        const std::string where = origin + ": entry " + std::to_string(position++);
        try {
            ManifestEntry entry;
            entry.id = e.at("id").get<std::string>();
            const std::string ctx = origin + ": entry '" + entry.id + "'";
            entry.title = e.value("title", entry.id);
            const auto period_name = e.at("period").get<std::string>();
            auto period = parse_period(period_name);
            if (!period) throw LoadError(ctx + ": invalid period '" + period_name + "'");
            entry.period = *period;
            const auto chrono = e.at("chrono_index").get<long long>();
            if (chrono < 0) throw LoadError(ctx + ": chrono_index must be >= 0");
            entry.chrono_index = static_cast<std::size_t>(chrono);
            std::filesystem::path file = e.at("file_path").get<std::string>();
            entry.file_path = file.is_absolute() ? file : base_dir / file;
            if (e.contains("expected_word_count") && !e["expected_word_count"].is_null())
                entry.expected_word_count = e["expected_word_count"].get<std::size_t>();
            manifest.entries.push_back(std::move(entry));
        } catch (const json::exception& ex) {
            throw LoadError(where + ": " + ex.what());
        }
    }
    if (doc.contains("period_word_totals")) {
        for (const auto& [name, total] : doc["period_word_totals"].items()) {
            auto period = parse_period(name);
            if (!period) throw LoadError(origin + ": period_word_totals: invalid period '" + name + "'");
            manifest.period_word_totals[*period] = total.get<std::size_t>();
        }
    }
    return manifest;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_json(path), path.parent_path(), path.string());
}

inline json manifest_to_json(const CorpusManifest& manifest, const std::filesystem::path& relative_to = {}) {
    json entries = json::array();
    for (const auto& e : manifest.entries) {
        json j;
        j["id"] = e.id;
        j["title"] = e.title;
        j["period"] = std::string(to_string(e.period));
        j["chrono_index"] = e.chrono_index;
        j["file_path"] = relative_to.empty() ? e.file_path.generic_string()
                                             : e.file_path.lexically_relative(relative_to).generic_string();
        if (e.expected_word_count) j["expected_word_count"] = *e.expected_word_count;
        entries.push_back(std::move(j));
    }
    json doc;
    doc["entries"] = std::move(entries);
    if (!manifest.period_word_totals.empty()) {
        json totals = json::object();
        for (const auto& [p, n] : manifest.period_word_totals) totals[std::string(to_string(p))] = n;
        doc["period_word_totals"] = std::move(totals);
    }
    return doc;
}

inline bool within_tolerance(std::size_t actual, std::size_t expected) {
    const double diff = std::abs(static_cast<double>(actual) - static_cast<double>(expected));
    return diff <= kWordCountTolerance * static_cast<double>(expected);
}

// Reads, normalizes and tokenizes every entry; returns documents in
// chrono_index order. Word-count mismatches are warnings, not errors.
inline std::vector<TextDocument> load_corpus(const CorpusManifest& manifest, const WarningSink& warnings = {}) {
    std::set<std::string> ids;
    std::set<std::size_t> chrono;
    for (const auto& e : manifest.entries) {
        if (e.id.empty()) throw LoadError("manifest entry with empty id");
        if (!ids.insert(e.id).second) throw LoadError("duplicate text id '" + e.id + "'");
        if (!chrono.insert(e.chrono_index).second)
            throw LoadError("entry '" + e.id + "': duplicate chrono_index " + std::to_string(e.chrono_index));
    }
    for (const auto& e : manifest.entries) {
        if (e.chrono_index >= manifest.entries.size())
            throw LoadError("entry '" + e.id + "': chrono_index " + std::to_string(e.chrono_index) +
                            " leaves a gap (indices must be 0.." + std::to_string(manifest.entries.size() - 1) + ")");
    }

    std::vector<TextDocument> docs;
    docs.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        std::string raw;
        try {
            raw = read_file(e.file_path);
        } catch (const IoError&) {
            throw LoadError("entry '" + e.id + "': missing or unreadable file " + e.file_path.string());
        }
        try {
            docs.push_back(make_document(e.id, e.title, e.period, e.chrono_index, std::move(raw)));
        } catch (const EncodingError& ex) {
            throw LoadError("entry '" + e.id + "' (" + e.file_path.string() + "): " + ex.what());
        }
        const auto& doc = docs.back();
        if (doc.tokens.empty()) warn(warnings, "entry '" + e.id + "': text has no tokens");
        if (e.expected_word_count && !within_tolerance(doc.word_count(), *e.expected_word_count)) {
            warn(warnings, "entry '" + e.id + "': word count " + std::to_string(doc.word_count()) +
                               " differs from expected " + std::to_string(*e.expected_word_count) + " by more than 0.5%");
        }
    }
    std::sort(docs.begin(), docs.end(),
              [](const TextDocument& a, const TextDocument& b) { return a.chrono_index < b.chrono_index; });

    if (!manifest.period_word_totals.empty()) {
        std::map<Period, std::size_t> totals;
        for (const auto& d : docs) totals[d.period] += d.word_count();
        for (const auto& [period, expected] : manifest.period_word_totals) {
            if (!within_tolerance(totals[period], expected)) {
                warn(warnings, std::string("period ") + std::string(to_string(period)) + ": word count " +
                                   std::to_string(totals[period]) + " differs from expected " +
                                   std::to_string(expected) + " by more than 0.5%");
            }
        }
    }
    return docs;
}

inline std::size_t total_word_count(const std::vector<TextDocument>& corpus) {
    std::size_t n = 0;
    for (const auto& d : corpus) n += d.word_count();
    return n;
}

// Hash over ids, periods, chronology and normalized text.
inline std::string corpus_hash(const std::vector<TextDocument>& corpus) {
    Sha256 h;
    for (const auto& d : corpus) {
        h.update_field(d.id).update_field(to_string(d.period)).update_field(std::to_string(d.chrono_index));
        h.update_field(d.text);
    }
    return h.hex();
}

}  // namespace diachron
