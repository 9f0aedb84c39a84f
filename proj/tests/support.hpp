#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "diachron/corpus.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/oracle/synth.hpp"
#include "diachron/pattern.hpp"

namespace testsupport {

// Hand-rolled generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    std::size_t range(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
    bool chance(double p) { return uniform() < p; }

    std::vector<double> vec(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

    // Values drawn from a small grid so ties occur.
    std::vector<double> tied_vec(std::size_t n, int levels) {
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(index(static_cast<std::size_t>(levels)));
        return v;
    }

    template <class T>
    const T& pick(const std::vector<T>& items) {
        return items[index(items.size())];
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("diachron-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// In-memory documents for a synthetic corpus (no files involved).
inline std::vector<diachron::TextDocument> documents(const diachron::oracle::SynthCorpus& c) {
    std::vector<diachron::TextDocument> docs;
    for (std::size_t t = 0; t < c.raw_texts.size(); ++t) {
        const auto& e = c.manifest.entries[t];
        docs.push_back(diachron::make_document(e.id, e.title, e.period, e.chrono_index, c.raw_texts[t]));
    }
    return docs;
}

inline diachron::TextDocument doc(const std::string& raw, const std::string& id = "t") {
    return diachron::make_document(id, id, diachron::Period::EarlyVedic, 0, raw);
}

inline diachron::FeaturePattern pattern(const std::string& id, const std::string& base,
                                        std::vector<std::string> pos = {}, std::vector<std::string> neg = {}) {
    diachron::FeaturePattern p;
    p.feature_id = id;
    p.base_regex = base;
    p.positive_contexts = std::move(pos);
    p.negative_contexts = std::move(neg);
    return p;
}

// A random but valid synthetic spec.
inline diachron::oracle::SynthSpec random_spec(std::uint64_t seed, std::size_t texts, std::size_t min_tokens,
                                               std::size_t max_tokens, std::size_t features = 20) {
    Gen g(seed);
    diachron::oracle::SynthSpec spec;
    spec.seed = seed;
    spec.num_features = features;
    for (std::size_t t = 0; t < texts; ++t) {
        diachron::oracle::SynthText st;
        st.text_id = "s" + std::to_string(t);
        st.period = diachron::kAllPeriods[t % diachron::kAllPeriods.size()];
        st.token_count = g.range(min_tokens, max_tokens);
        for (std::size_t k = 0; k < features; ++k)
            if (g.chance(0.7)) st.rates[diachron::oracle::feature_id(k)] = g.uniform(0.0, 8.0);
        st.positive_cue_probability = g.uniform(0.0, 0.6);
        st.negative_cue_probability = g.uniform(0.0, 0.6);
        spec.texts.push_back(std::move(st));
    }
    return spec;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace testsupport
