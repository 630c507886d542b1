#include <sstream>

#include <gtest/gtest.h>

#include "corpusforge/error.hpp"
#include "corpusforge/manifest.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/synth.hpp"
#include "test_util.hpp"

namespace corpusforge {
namespace {

using testing::read_bytes;
using testing::scratch_dir;
using testing::write_text;

DatasetManifest sample_manifest() {
  DatasetManifest m;
  m.seed = 42;
  m.provenance["labelspace"] = "kinetics";
  m.provenance["sample"] = "strategy=sqrt budget=3 seed=42";
  m.add_row("v1", "catching fish", 0.0, 10.0);
  m.add_row("v2", "burn candle", 2.5, 4.0);
  m.add_row("v\"3", "label with \\ slash", 1.0 / 3.0, 2.0 / 3.0);
  return m;
}

TEST(Manifest, EmptyFileLoadsAsEmptyManifest) {
  const auto dir = scratch_dir();
  write_text(dir / "empty.jsonl", "");
  const auto m = load_manifest(dir / "empty.jsonl");
  EXPECT_TRUE(m.rows.empty());
}

TEST(Manifest, ZeroRowManifestIsHeaderOnly) {
  const auto dir = scratch_dir();
  DatasetManifest m;
  m.seed = 7;
  save_manifest(m, dir / "m.jsonl");
  EXPECT_EQ(read_bytes(dir / "m.jsonl"),
            "{\"format\":\"corpusforge-manifest-v1\",\"seed\":7,\"provenance\":{}}\n");
}

TEST(Manifest, CanonicalRowFormat) {
  DatasetManifest m;
  m.add_row("a", "x", 1.25, 4.0);
  const auto text = manifest_to_jsonl(m);
  EXPECT_NE(text.find("{\"video_id\":\"a\",\"label\":\"x\",\"clip_start_s\":1.250000,\"clip_len_s\":4.000000}\n"),
            std::string::npos);
}

TEST(Manifest, RoundTripIsStructuralAndByteStable) {
  const auto dir = scratch_dir();
  const auto m = sample_manifest();
  save_manifest(m, dir / "a.jsonl");
  const auto loaded = load_manifest(dir / "a.jsonl");
  EXPECT_EQ(loaded, m);
  save_manifest(loaded, dir / "b.jsonl");
  EXPECT_EQ(read_bytes(dir / "a.jsonl"), read_bytes(dir / "b.jsonl"));
}

TEST(Manifest, RoundTripProperty) {
  // Random manifests: save -> load is the identity and save is deterministic.
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    DatasetManifest m;
    m.seed = rng.next();
    m.provenance["k" + std::to_string(rng.below(5))] = "v" + std::to_string(rng.next());
    const auto rows = rng.below(20);
    for (std::uint64_t r = 0; r < rows; ++r) {
      m.add_row("vid" + std::to_string(r), "label" + std::to_string(rng.below(4)), rng.uniform(0, 100),
                rng.uniform(0.001, 60));
    }
    const auto text = manifest_to_jsonl(m);
    std::istringstream in(text);
    const auto back = manifest_from_jsonl(in);
    ASSERT_EQ(back, m);
    ASSERT_EQ(manifest_to_jsonl(back), text);
  }
}

TEST(Manifest, NegativeStartIsValidationError) {
  const auto dir = scratch_dir();
  write_text(dir / "bad.jsonl",
             "{\"format\":\"corpusforge-manifest-v1\",\"seed\":1,\"provenance\":{}}\n"
             "{\"video_id\":\"a\",\"label\":\"x\",\"clip_start_s\":-1,\"clip_len_s\":2}\n");
  EXPECT_THROW(load_manifest(dir / "bad.jsonl"), ValidationError);
}

TEST(Manifest, DuplicateRowIsValidationError) {
  std::istringstream in(
      "{\"format\":\"corpusforge-manifest-v1\",\"seed\":1,\"provenance\":{}}\n"
      "{\"video_id\":\"a\",\"label\":\"x\",\"clip_start_s\":0,\"clip_len_s\":2}\n"
      "{\"video_id\":\"a\",\"label\":\"y\",\"clip_start_s\":0.0000001,\"clip_len_s\":3}\n");
  EXPECT_THROW(manifest_from_jsonl(in), ValidationError);
}

TEST(Manifest, ParseErrorsCarryLineNumbers) {
  std::istringstream bad_json(
      "{\"format\":\"corpusforge-manifest-v1\",\"seed\":1,\"provenance\":{}}\n"
      "{\"video_id\":\"a\",\"label\":\"x\",\"clip_start_s\":0,\"clip_len_s\":2}\n"
      "{not json}\n");
  try {
    manifest_from_jsonl(bad_json);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream unknown(
      "{\"format\":\"corpusforge-manifest-v1\",\"seed\":1,\"provenance\":{}}\n"
      "{\"video_id\":\"a\",\"label\":\"x\",\"clip_start_s\":0,\"clip_len_s\":2,\"extra\":1}\n");
  try {
    manifest_from_jsonl(unknown);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("extra"), std::string::npos);
  }
}

TEST(Manifest, SaveChecksCorpusBeforeWriting) {
  const auto dir = scratch_dir();
  Corpus corpus{{"v1", 10.0, {"x"}, 16.0, std::nullopt}};
  DatasetManifest m;
  m.add_row("missing", "x", 0.0, 1.0);
  EXPECT_THROW(save_manifest(m, dir / "m.jsonl", &corpus), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "m.jsonl"));

  DatasetManifest overflow;
  overflow.add_row("v1", "x", 8.0, 4.0);
  EXPECT_THROW(save_manifest(overflow, dir / "m.jsonl", &corpus), ValidationError);

  DatasetManifest ok;
  ok.add_row("v1", "x", 6.0, 4.0);
  EXPECT_NO_THROW(save_manifest(ok, dir / "m.jsonl", &corpus));
}

TEST(Manifest, LabelsCheckedAgainstLabelSpace) {
  LabelSpace space;
  space.entries["x"] = {"x"};
  DatasetManifest m;
  m.add_row("v1", "y", 0.0, 1.0);
  EXPECT_THROW(validate_manifest(m, nullptr, &space), ValidationError);
}

TEST(Corpus, RoundTripAndValidation) {
  const auto dir = scratch_dir();
  Corpus corpus{{"v1", 3.5, {"catchfish", "fishing"}, 16.0, std::string("file:///a.mp4")},
                {"v2", 58.0, {"swim"}, 30.0, std::nullopt}};
  save_corpus(corpus, dir / "c.jsonl");
  EXPECT_EQ(load_corpus(dir / "c.jsonl"), corpus);

  write_text(dir / "dup.jsonl", "{\"id\":\"a\",\"duration_s\":1,\"hashtags\":[\"x\"]}\n"
                                "{\"id\":\"a\",\"duration_s\":2,\"hashtags\":[\"y\"]}\n");
  EXPECT_THROW(load_corpus(dir / "dup.jsonl"), ValidationError);
  write_text(dir / "neg.jsonl", "{\"id\":\"a\",\"duration_s\":0,\"hashtags\":[\"x\"]}\n");
  EXPECT_THROW(load_corpus(dir / "neg.jsonl"), ValidationError);
}

TEST(Corpus, HashtagsAreLowercasedAndStripped) {
  std::istringstream in("{\"id\":\"a\",\"duration_s\":1,\"hashtags\":[\"#CatchFish\",\"Swim\"]}\n");
  const auto c = corpus_from_jsonl(in);
  EXPECT_EQ(c[0].hashtags, (std::set<std::string>{"catchfish", "swim"}));
}

TEST(LabelHistogram, SingleMatchingHashtagPerVideo) {
  LabelSpace space;
  space.entries["A"] = {"a1", "a2"};
  space.entries["B"] = {"b1"};
  Corpus corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back({"v" + std::to_string(i), 1.0, {i % 2 ? "a1" : "a2"}, 16, {}});
  const auto h = label_histogram(corpus, space);
  EXPECT_EQ(h.counts.at("A"), 5u);
  EXPECT_EQ(h.counts.at("B"), 0u);
  EXPECT_EQ(h.total(), corpus.size());
}

TEST(LabelHistogram, MultiLabelVideoCountsForEachLabel) {
  LabelSpace space;
  space.entries["A"] = {"a"};
  space.entries["B"] = {"b"};
  Corpus corpus{{"v", 1.0, {"a", "b", "zzz"}, 16, {}}};
  const auto h = label_histogram(corpus, space);
  EXPECT_EQ(h.counts.at("A"), 1u);
  EXPECT_EQ(h.counts.at("B"), 1u);
  EXPECT_GE(h.total(), corpus.size());
}

TEST(LabelHistogram, ZipfCorpusMatchesGeneratorTruth) {
  const auto z = synth::zipf_corpus(1000, 10, 1.0, 5);
  ASSERT_EQ(z.corpus.size(), 1000u);
  const auto h = label_histogram(z.corpus, z.space);
  EXPECT_EQ(h.counts, z.truth);
  EXPECT_EQ(h.total(), 1000u);
  // Zipf shape: label0 is the head, strictly more than label9.
  EXPECT_GT(h.counts.at("label0000"), h.counts.at("label0009"));
}

TEST(LabelHistogram, NoMatchesGivesAllZero) {
  LabelSpace space;
  space.entries["A"] = {"a"};
  Corpus corpus{{"v", 1.0, {"q"}, 16, {}}};
  EXPECT_EQ(label_histogram(corpus, space).total(), 0u);
}

}  // namespace
}  // namespace corpusforge
