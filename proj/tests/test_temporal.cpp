#include <cmath>

#include <gtest/gtest.h>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/synth.hpp"
#include "corpusforge/temporal.hpp"
#include "oracles.hpp"

namespace corpusforge::temporal {
namespace {

std::uint64_t rows_total(const DatasetManifest& m, double* seconds = nullptr) {
  double s = 0.0;
  for (const auto& r : m.rows) s += r.clip_len_s;
  if (seconds) *seconds = s;
  return m.rows.size();
}

TEST(Jitter, ClipAsLongAsVideoStartsAtZero) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = jitter_clip(7.5, 7.5, std::nullopt, seed);
    EXPECT_EQ(c.start_s, 0.0);
    EXPECT_EQ(c.len_s, 7.5);
  }
}

TEST(Jitter, CenterWindowOfSixtySecondVideo) {
  const auto w = center_window(60.0);
  EXPECT_EQ(w.lo_s, 28.0);
  EXPECT_EQ(w.hi_s, 32.0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto c = jitter_clip(60.0, 1.5, w, seed);
    ASSERT_GE(c.start_s, 28.0);
    ASSERT_LE(c.start_s, 32.0 - 1.5);
  }
}

TEST(Jitter, StartIsUniform) {
  std::vector<double> starts;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) starts.push_back(jitter_clip(10.0, 2.0, std::nullopt, seed).start_s);
  EXPECT_GT(oracle::ks_uniform_p_value(starts, 0.0, 8.0), 0.01);
}

TEST(Jitter, KsOracleRejectsSkew) {
  std::vector<double> skewed;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const double u = jitter_clip(10.0, 2.0, std::nullopt, seed).start_s / 8.0;
    skewed.push_back(8.0 * u * u);
  }
  EXPECT_LT(oracle::ks_uniform_p_value(skewed, 0.0, 8.0), 0.01);
}

TEST(Jitter, ContainmentOverRandomPlans) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double dur = rng.uniform(0.1, 120.0);
    const double len = rng.uniform(0.01, 1.0) * dur;
    std::optional<Window> w;
    if (rng.below(2)) {
      const double lo = rng.uniform(0.0, dur - len);
      w = Window{lo, lo + len + rng.uniform(0.0, dur - lo - len)};
    }
    const auto c = jitter_clip(dur, len, w, rng.next());
    ASSERT_GE(c.start_s, 0.0);
    ASSERT_LE(c.start_s + c.len_s, dur) << dur << " " << len;
    if (w) {
      ASSERT_GE(c.start_s, w->lo_s);
      ASSERT_LE(c.start_s + c.len_s, w->hi_s);
    }
  }
}

TEST(Jitter, InfeasibleRequestsThrow) {
  EXPECT_THROW(jitter_clip(10.0, 11.0, std::nullopt, 1), ValidationError);
  EXPECT_THROW(jitter_clip(10.0, 3.0, Window{4.0, 6.0}, 1), ValidationError);
  EXPECT_THROW(jitter_clip(10.0, 1.0, Window{8.0, 12.0}, 1), ValidationError);
  EXPECT_THROW(jitter_clip(10.0, 0.0, std::nullopt, 1), ValidationError);
}

TEST(LengthClasses, Membership) {
  VideoRecord v{"v", 3.0, {}, 16, {}};
  EXPECT_TRUE(in_length_class(v, LengthClass::Short));
  EXPECT_FALSE(in_length_class(v, LengthClass::Long));
  EXPECT_FALSE(in_length_class(v, LengthClass::LongCenter));
  v.duration_s = 58.0;
  const auto c = class_clip(v, LengthClass::LongCenter);
  EXPECT_EQ(c.start_s, 27.0);
  EXPECT_EQ(c.start_s + c.len_s, 31.0);
  EXPECT_EQ(class_clip(v, LengthClass::Long).len_s, 58.0);
}

TEST(LengthClasses, CenterWindowsAreCentered) {
  Rng rng(6);
  for (int i = 0; i < 10000; ++i) {
    VideoRecord v{"v", quantize_seconds(rng.uniform(kLongMin, kLongMax)), {}, 16, {}};
    const auto c = class_clip(v, LengthClass::LongCenter);
    ASSERT_NEAR(c.start_s + c.len_s / 2, v.duration_s / 2, 1e-9);
    ASSERT_NEAR(c.len_s, kCenterWindow, 1e-9);
  }
}

TEST(LengthClasses, PartitionMatchesGenerator) {
  const double durations[] = {0.5, 1.0, 3.0, 5.0, 5.5, 30.0, 54.9, 55.0, 58.0, 60.0, 61.0};
  Corpus corpus;
  std::set<std::string> want_short, want_long;
  for (std::size_t i = 0; i < std::size(durations); ++i) {
    const auto id = "v" + std::to_string(i);
    corpus.push_back({id, durations[i], {"x"}, 16, {}});
    if (durations[i] >= 1 && durations[i] <= 5) want_short.insert(id);
    if (durations[i] >= 55 && durations[i] <= 60) want_long.insert(id);
  }
  auto ids = [](const Corpus& c) {
    std::set<std::string> out;
    for (const auto& v : c) out.insert(v.id);
    return out;
  };
  EXPECT_EQ(ids(build_length_class(corpus, LengthClass::Short)), want_short);
  EXPECT_EQ(ids(build_length_class(corpus, LengthClass::Long)), want_long);
  EXPECT_EQ(ids(build_length_class(corpus, LengthClass::LongCenter)), want_long);
}

TEST(LengthClasses, EmptyClassReportsCounts) {
  const Corpus corpus{{"a", 10.0, {}, 16, {}}, {"b", 2.0, {}, 16, {}}};
  try {
    build_length_class(corpus, LengthClass::Long);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("short: 1, long: 0, other: 1"), std::string::npos) << e.what();
  }
}

TEST(FixedDuration, FourSecondVideosFillHundredSeconds) {
  const auto z = synth::corpus_with_counts({{"a", 20}, {"b", 15}, {"c", 10}}, 1, 4.0, 4.0);
  const auto m = plan_budget(z.corpus, {BudgetMode::FixedDuration, 0, 100.0 / 60.0, LengthClass::Short}, z.space, 3);
  EXPECT_EQ(m.rows.size(), 25u);
  EXPECT_EQ(m.provenance.at("achieved_minutes"), format_fixed6(100.0 / 60.0));
}

TEST(FixedDuration, TotalWithinOneClipOfBudget) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = synth::corpus_with_counts({{"a", 1 + rng.below(60)}, {"b", 1 + rng.below(60)}, {"c", 1 + rng.below(60)}},
                                             rng.next(), kShortMin, kShortMax);
    double supply = 0.0;
    for (const auto& v : z.corpus) supply += v.duration_s;
    const double minutes = rng.uniform(0.05, supply / 60.0);
    const auto m = plan_budget(z.corpus, {BudgetMode::FixedDuration, 0, minutes, LengthClass::Short}, z.space, 9);
    double total = 0.0;
    rows_total(m, &total);
    ASSERT_LE(total, minutes * 60.0 + 1e-6);
    ASSERT_GT(total, minutes * 60.0 - kShortMax);
    EXPECT_NO_THROW(validate_manifest(m, &z.corpus, &z.space));
  }
}

TEST(FixedDuration, RoundRobinKeepsLabelsBalanced) {
  const auto z = synth::corpus_with_counts({{"big", 100}, {"small", 10}}, 2, 2.0, 2.0);
  const auto m = plan_budget(z.corpus, {BudgetMode::FixedDuration, 0, 1.0, LengthClass::Short}, z.space, 1);
  std::map<std::string, int> per;
  for (const auto& r : m.rows) ++per[r.label];
  EXPECT_EQ(per["small"], 10);
  EXPECT_EQ(per["big"], 20);
}

TEST(FixedCount, ExactCountAndProportions) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = synth::zipf_corpus(200 + rng.below(300), 2 + rng.below(10), 1.0, rng.next(), 1.0, 5.0);
    const auto count = 1 + rng.below(z.corpus.size());
    const auto m = plan_budget(z.corpus, {BudgetMode::FixedCount, count, 0.0, LengthClass::Short}, z.space, 4);
    ASSERT_EQ(m.rows.size(), count);
    std::map<std::string, double> per;
    for (const auto& r : m.rows) per[r.label] += 1.0;
    for (const auto& [label, n] : z.truth) {
      const double expected = double(count) * double(n) / double(z.corpus.size());
      ASSERT_LE(std::abs(per[label] - expected), 1.0) << label;
    }
  }
}

TEST(FixedCount, WholeSubset) {
  const auto z = synth::zipf_corpus(120, 5, 1.0, 3, 1.0, 5.0);
  const auto m = plan_budget(z.corpus, {BudgetMode::FixedCount, 120, 0.0, LengthClass::Short}, z.space, 4);
  std::set<std::string> got;
  for (const auto& r : m.rows) got.insert(r.video_id);
  EXPECT_EQ(got.size(), 120u);
}

TEST(Budget, InsufficientCorpusThrows) {
  const auto z = synth::corpus_with_counts({{"a", 3}}, 1, 4.0, 4.0);
  EXPECT_THROW(plan_budget(z.corpus, {BudgetMode::FixedCount, 4, 0.0, LengthClass::Short}, z.space, 1),
               ValidationError);
  EXPECT_THROW(plan_budget(z.corpus, {BudgetMode::FixedDuration, 0, 1.0, LengthClass::Short}, z.space, 1),
               ValidationError);
  EXPECT_THROW(plan_budget(z.corpus, {BudgetMode::FixedCount, 1, 0.0, LengthClass::Long}, z.space, 1),
               ValidationError);
}

TEST(Budget, DeskScaleLengthTrio) {
  // short-N, long-center-N and long-N/10 over the same label distribution.
  const auto shorts = synth::corpus_with_counts({{"a", 600}, {"b", 300}, {"c", 100}}, 1, kShortMin, kShortMax);
  const auto longs = synth::corpus_with_counts({{"a", 600}, {"b", 300}, {"c", 100}}, 2, kLongMin, kLongMax);
  const std::uint64_t n = 500;
  const auto s = plan_budget(shorts.corpus, {BudgetMode::FixedCount, n, 0.0, LengthClass::Short}, shorts.space, 1);
  const auto lc = plan_budget(longs.corpus, {BudgetMode::FixedCount, n, 0.0, LengthClass::LongCenter}, longs.space, 1);
  const auto l = plan_budget(longs.corpus, {BudgetMode::FixedCount, n / 10, 0.0, LengthClass::Long}, longs.space, 1);
  double s_sec = 0, lc_sec = 0, l_sec = 0;
  EXPECT_EQ(rows_total(s, &s_sec), 10 * rows_total(l, &l_sec));
  EXPECT_EQ(rows_total(lc, &lc_sec), 10 * l.rows.size());
  // Similar hours: within a factor of two of each other.
  for (double a : {s_sec, lc_sec, l_sec})
    for (double b : {s_sec, lc_sec, l_sec}) EXPECT_LT(a / b, 2.0);
  std::map<std::string, int> per_s, per_l;
  for (const auto& r : s.rows) ++per_s[r.label];
  for (const auto& r : l.rows) ++per_l[r.label];
  EXPECT_EQ(per_s, (std::map<std::string, int>{{"a", 300}, {"b", 150}, {"c", 50}}));
  EXPECT_EQ(per_l, (std::map<std::string, int>{{"a", 30}, {"b", 15}, {"c", 5}}));
}

TEST(Budget, Deterministic) {
  const auto z = synth::zipf_corpus(300, 6, 1.0, 3, 1.0, 5.0);
  const BudgetPlan plan{BudgetMode::FixedDuration, 0, 5.0, LengthClass::Short};
  EXPECT_EQ(manifest_to_jsonl(plan_budget(z.corpus, plan, z.space, 8)),
            manifest_to_jsonl(plan_budget(z.corpus, plan, z.space, 8)));
  EXPECT_NE(manifest_to_jsonl(plan_budget(z.corpus, plan, z.space, 8)),
            manifest_to_jsonl(plan_budget(z.corpus, plan, z.space, 9)));
}

}  // namespace
}  // namespace corpusforge::temporal
