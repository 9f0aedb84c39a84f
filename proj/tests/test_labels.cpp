#include <gtest/gtest.h>

#include "diachron/labels.hpp"
#include "diachron/oracle/brute_scan.hpp"
#include "support.hpp"

using namespace diachron;
using testsupport::TempDir;

namespace {

struct Fixture {
    oracle::SynthCorpus synth;
    std::vector<TextDocument> corpus;
    PatternCatalog catalog;

    explicit Fixture(std::uint64_t seed)
        : synth(oracle::generate(testsupport::random_spec(seed, 4, 300, 900, 8))),
          corpus(testsupport::documents(synth)),
          catalog(make_catalog("toy", synth.catalog)) {}
};

}  // namespace

TEST(Labels, OneLabelPerRetainedMatch) {
    Fixture fx(3);
    const auto set = generate_labels(fx.corpus, fx.catalog);
    const auto brute = oracle::brute_scan(fx.corpus, fx.synth.catalog, kDefaultWindow);
    ASSERT_EQ(set.labels.size(), brute.size());
    std::vector<oracle::BruteMatch> from_labels;
    for (const auto& l : set.labels) from_labels.push_back({l.text_id, l.feature_id, l.word_index, l.confidence});
    std::sort(from_labels.begin(), from_labels.end());
    EXPECT_EQ(from_labels, brute);
    for (const auto& l : set.labels) {
        EXPECT_GE(l.confidence, 0.4);
        EXPECT_NE(l.context.find(l.word), std::string::npos);
    }
}

TEST(Labels, Ordering) {
    Fixture fx(4);
    const auto set = generate_labels(fx.corpus, fx.catalog);
    std::map<std::string, std::size_t> chrono;
    for (const auto& d : fx.corpus) chrono[d.id] = d.chrono_index;
    for (std::size_t i = 1; i < set.labels.size(); ++i) {
        const auto& a = set.labels[i - 1];
        const auto& b = set.labels[i];
        EXPECT_LE(std::tie(chrono[a.text_id], a.word_index, a.feature_id),
                  std::tie(chrono[b.text_id], b.word_index, b.feature_id));
    }
}

TEST(Labels, ExportImportRoundTrip) {
    Fixture fx(5);
    TempDir dir("labels");
    const auto set = generate_labels(fx.corpus, fx.catalog);
    const auto path = dir / "weak_labels.jsonl";
    export_labels(set, path);
    EXPECT_TRUE(std::filesystem::exists(dir / "weak_labels.header.json"));
    const auto back = import_labels(path);
    EXPECT_EQ(back, set);
    const auto header = read_json(label_header_path(path));
    EXPECT_EQ(header["format"], "diachron-weak-labels/1");
    EXPECT_EQ(header["feature_columns"]["f00"], 0);
    EXPECT_EQ(header["feature_columns"]["f07"], 7);
    EXPECT_EQ(header["corpus_hash"], corpus_hash(fx.corpus));
}

TEST(Labels, ImportRejectsTruncatedFile) {
    Fixture fx(6);
    TempDir dir("labels-bad");
    const auto set = generate_labels(fx.corpus, fx.catalog);
    ASSERT_GT(set.labels.size(), 1u);
    const auto path = dir / "l.jsonl";
    export_labels(set, path);
    auto body = read_file(path);
    body = body.substr(0, body.find('\n') + 1);
    write_file(path, body);
    EXPECT_THROW(import_labels(path), LoadError);
    write_file(path, "{not json\n");
    EXPECT_THROW(import_labels(path), LoadError);
}

TEST(Labels, EmptyCorpusGivesEmptySet) {
    const auto cat = make_catalog("v", {testsupport::pattern("a", "x")});
    const auto set = generate_labels({}, cat);
    EXPECT_TRUE(set.labels.empty());
    EXPECT_EQ(label_header(set)["label_count"], 0);
}
