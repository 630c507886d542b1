#include <cmath>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "corpusforge/dedup.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace corpusforge::dedup {
namespace {

constexpr int kN = kFrameSide;

Image random_image(Rng& rng, int lo = 0, int hi = 255) {
  Image img(kN, kN);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(lo + rng.below(hi - lo + 1));
  return img;
}

Image complement(const Image& img) {
  Image out = img;
  for (auto& p : out.pixels) p = 255 - p;
  return out;
}

SignatureSequence render(const synth::VideoParams& p, const std::string& id) {
  return decode_frames(id, synth::GratingVideo(p));
}

TEST(Census, ConstantFrameIsFirstBasisVector) {
  Image img(kN, kN);
  std::fill(img.pixels.begin(), img.pixels.end(), 77);
  Signature e0{};
  e0[0] = 1.0;
  EXPECT_EQ(census_signature(img), e0);
}

TEST(Census, MatchesPixelLoopOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_image(rng);
    const auto got = census_signature(img);
    const auto want = oracle::census(img);
    for (int i = 0; i < kSignatureDim; ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
    const auto comp = census_signature(complement(img));
    const auto comp_want = oracle::census(complement(img));
    for (int i = 0; i < kSignatureDim; ++i) ASSERT_NEAR(comp[i], comp_want[i], 1e-12);
  }
}

TEST(Census, ComplementReversesFoldOnTieFreeFrame) {
  // Neighbour offsets dx + 3dy are all nonzero and small, so no ties.
  Image img(kN, kN);
  for (int y = 0; y < kN; ++y)
    for (int x = 0; x < kN; ++x) img.at(y, x) = static_cast<std::uint8_t>((x + 3 * y) % 256);
  const auto a = census_signature(img);
  const auto b = census_signature(complement(img));
  for (int i = 0; i < kSignatureDim; ++i) EXPECT_DOUBLE_EQ(b[63 - i], a[i]) << i;
}

TEST(Census, VerticalGradientHitsSingleBin) {
  Image img(kN, kN);
  for (int y = 0; y < kN; ++y)
    for (int x = 0; x < kN; ++x) img.at(y, x) = static_cast<std::uint8_t>(y * 2);
  // BR, B, BL are bits 4, 5, 6: code 112, bin 28.
  const auto s = census_signature(img);
  EXPECT_EQ(s[28], 1.0);
  EXPECT_EQ(std::accumulate(s.begin(), s.end(), 0.0), 1.0);
}

TEST(Census, L1NormAndBrightnessShift) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto img = random_image(rng, 0, 200);
    const auto s = census_signature(img);
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-9);
    const auto shift = static_cast<int>(rng.below(56));
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p + shift);
    EXPECT_EQ(census_signature(img), s);
  }
}

TEST(Census, WrongDimensionsThrow) {
  EXPECT_THROW(census_signature(Image(111, 112)), ValidationError);
  EXPECT_THROW(census_signature(Image(112, 112, 3)), ValidationError);
  EXPECT_NO_THROW(census_signature(Image(32, 32), 32));
}

TEST(Decode, FrameRateResampling) {
  auto p = synth::random_video(4, 1.0);
  EXPECT_EQ(render(p, "a").frames.size(), 16u);
  p.fps = 32.0;
  EXPECT_EQ(render(p, "a").frames.size(), 16u);
  p.duration_s = 2.0;
  p.fps = 16.0;
  EXPECT_EQ(render(p, "a").frames.size(), 32u);
}

TEST(Decode, DecimationPicksEveryOtherFrame) {
  auto p = synth::random_video(5, 1.0);
  p.fps = 32.0;
  const synth::GratingVideo video(p);
  const auto seq = decode_frames("v", video);
  for (std::size_t j = 0; j < seq.frames.size(); ++j) {
    EXPECT_EQ(seq.frames[j], census_signature(video.frame(2 * j))) << j;
  }
}

TEST(Decode, CensusIsRobustToScale) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto small = render(synth::random_video(seed, 1.0, 112), "s");
    const auto large = render(synth::random_video(seed, 1.0, 224), "l");
    ASSERT_EQ(small.frames.size(), large.frames.size());
    for (std::size_t i = 0; i < small.frames.size(); ++i) {
      EXPECT_GE(oracle::cosine(small.frames[i], large.frames[i]), 0.95) << seed << ":" << i;
    }
  }
}

TEST(Decode, RgbInputUsesLuma) {
  Image rgb(kN, kN, 3);
  Image gray(kN, kN);
  Rng rng(6);
  for (int y = 0; y < kN; ++y) {
    for (int x = 0; x < kN; ++x) {
      const int r = int(rng.below(256)), g = int(rng.below(256)), b = int(rng.below(256));
      rgb.at(y, x, 0) = r;
      rgb.at(y, x, 1) = g;
      rgb.at(y, x, 2) = b;
      gray.at(y, x) = static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
    }
  }
  EXPECT_EQ(to_gray(rgb).pixels, gray.pixels);
  const MemoryFrames frames({rgb}, 16.0);
  EXPECT_EQ(decode_frames("rgb", frames).frames[0], census_signature(gray));
}

TEST(Decode, EmptySourceThrows) {
  const MemoryFrames none({}, 16.0);
  EXPECT_THROW(decode_frames("x", none), ValidationError);
}

TEST(Lsh, InsertThenQueryFindsItself) {
  LshIndex idx;
  const auto seq = render(synth::random_video(7, 1.0), "v");
  index_insert(idx, seq);
  EXPECT_EQ(idx.size(), seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto c = idx.candidates(seq.frames[i]);
    EXPECT_NE(std::find(c.begin(), c.end(), std::uint32_t(i)), c.end());
  }
}

TEST(Lsh, EmptyIndexHasNoCandidates) {
  const LshIndex idx;
  Signature s{};
  s[3] = 1.0;
  EXPECT_TRUE(idx.candidates(s).empty());
  EXPECT_TRUE(frame_match(idx, s).empty());
}

TEST(Lsh, CollisionRateForDissimilarVectors) {
  // Pairs with disjoint supports are exactly orthogonal; per-bit agreement is
  // 1 - theta/pi = 1/2, so a band collides with probability 2^-8.
  Rng rng(8);
  const int pairs = 1000;
  const LshParams params{};
  int band_hits = 0, any_hits = 0;
  for (int t = 0; t < pairs; ++t) {
    LshIndex idx({params.bands, params.bits, std::uint64_t(t)});
    Signature a{}, b{};
    std::vector<int> perm(kSignatureDim);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i < kSignatureDim; ++i) (i < 32 ? a : b)[perm[i]] = rng.uniform01();
    ASSERT_LT(oracle::cosine(a, b), 0.1);
    bool any = false;
    for (int band = 0; band < params.bands; ++band) {
      const bool hit = idx.band_key(a, band) == idx.band_key(b, band);
      band_hits += hit;
      any |= hit;
    }
    any_hits += any;
  }
  const double per_band = double(band_hits) / (pairs * params.bands);
  const double p = std::pow(0.5, params.bits);
  EXPECT_LE(per_band, 0.05);
  EXPECT_NEAR(per_band, p, 5 * std::sqrt(p / (pairs * params.bands)));
  const double any_expected = 1 - std::pow(1 - p, params.bands);
  EXPECT_NEAR(double(any_hits) / pairs, any_expected, 5 * std::sqrt(any_expected / pairs));
}

TEST(FrameMatch, ExactAndPerturbedQueries) {
  LshIndex idx;
  const auto seq = render(synth::random_video(9, 1.0), "v");
  index_insert(idx, seq);
  const auto hits = frame_match(idx, seq.frames[5], 1.0);
  EXPECT_NE(std::find(hits.begin(), hits.end(), FrameRef{"v", 5}), hits.end());

  Signature perturbed = seq.frames[5];
  perturbed[0] += 1e-3;
  perturbed[40] += 2e-3;
  for (const auto& h : frame_match(idx, perturbed, 1.0)) {
    EXPECT_EQ(oracle::cosine(perturbed, seq.frames[h.frame_idx]), 1.0);
  }
  EXPECT_TRUE(frame_match(idx, perturbed, 1.0).empty());
}

TEST(FrameMatch, NoisyCopyAtCosine095) {
  LshIndex idx;
  const auto seq = render(synth::random_video(10, 1.0), "v");
  index_insert(idx, seq);
  Rng rng(11);
  for (std::size_t f = 0; f < seq.frames.size(); f += 3) {
    const auto& s = seq.frames[f];
    Signature noise;
    for (auto& v : noise) v = rng.normal();
    auto noisy = [&](double sigma) {
      Signature out = s;
      for (int i = 0; i < kSignatureDim; ++i) out[i] += sigma * noise[i];
      return out;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracle::cosine(noisy(mid), s) > 0.95 ? lo : hi) = mid;
    }
    const auto q = noisy(lo);
    ASSERT_NEAR(oracle::cosine(q, s), 0.95, 1e-6);
    const auto hits = frame_match(idx, q, 0.9);
    EXPECT_NE(std::find(hits.begin(), hits.end(), FrameRef{"v", f}), hits.end()) << f;
  }
}

TEST(Overlap, SelfOverlapIsExactlyHundred) {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    LshIndex idx;
    const auto seq = render(synth::random_video(seed, 2.0), "v");
    index_insert(idx, seq);
    const auto o = overlap(seq, idx);
    ASSERT_FALSE(o.empty());
    const auto self = std::find_if(o.begin(), o.end(), [](const auto& t) { return t.target_id == "v"; });
    ASSERT_NE(self, o.end());
    EXPECT_EQ(self->overlap_pct, 100.0);
  }
}

// Frames whose census histograms are pairwise below cosine 0.9. Each frame
// tiles its quadrants with two integer ramps; a ramp with gradient g gives
// every pixel the code of the half-plane {d : g.d > 0}.
std::vector<Image> distinct_frames(std::size_t want) {
  static const int dirs[16][2] = {{2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {-1, 2}, {-2, 2}, {-2, 1},
                                  {-2, 0}, {-2, -1}, {-2, -2}, {-1, -2}, {0, -2}, {1, -2}, {2, -2}, {2, -1}};
  std::vector<Image> frames;
  std::vector<Signature> sigs;
  for (int a = 0; a < 16 && frames.size() < want; ++a) {
    for (int b = a + 1; b < 16 && frames.size() < want; ++b) {
      Image img(kN, kN);
      for (int y = 0; y < kN; ++y) {
        for (int x = 0; x < kN; ++x) {
          const bool first = (x < kN / 2) == (y < kN / 2);
          const auto& g = dirs[first ? a : b];
          const int cx = x < kN / 2 ? kN / 4 : 3 * kN / 4;
          const int cy = y < kN / 2 ? kN / 4 : 3 * kN / 4;
          img.at(y, x) = static_cast<std::uint8_t>(128 + g[0] * (x - cx) + g[1] * (y - cy));
        }
      }
      const auto sig = oracle::census(img);
      if (std::all_of(sigs.begin(), sigs.end(), [&](const auto& s) { return oracle::cosine(s, sig) < 0.9; })) {
        frames.push_back(img);
        sigs.push_back(sig);
      }
    }
  }
  return frames;
}

TEST(Overlap, MiddleHalfOfDistinctFrames) {
  const auto frames = distinct_frames(32);
  ASSERT_EQ(frames.size(), 32u);
  const MemoryFrames source_video(frames, 16.0);
  const MemoryFrames target_video({frames.begin() + 8, frames.begin() + 24}, 16.0);
  const auto source = decode_frames("src", source_video);
  LshIndex idx;
  index_insert(idx, decode_frames("tgt", target_video));
  const auto o = overlap(source, idx);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_NEAR(o[0].overlap_pct, 50.0, 100.0 / 32.0);
}

TEST(Overlap, DisjointContentIsZero) {
  const auto a = render(synth::random_video(40, 2.0), "a");
  const auto b = render(synth::random_video(41, 2.0), "b");
  double max_cos = 0.0;
  for (const auto& x : a.frames)
    for (const auto& y : b.frames) max_cos = std::max(max_cos, oracle::cosine(x, y));
  ASSERT_LT(max_cos, 0.9);
  LshIndex idx;
  index_insert(idx, b);
  EXPECT_TRUE(overlap(a, idx, 0.9).empty());
}

TEST(Overlap, MonotoneInTau) {
  LshIndex idx;
  std::vector<SignatureSequence> targets;
  for (std::uint64_t s = 50; s < 56; ++s) index_insert(idx, render(synth::random_video(s, 1.0), "t" + std::to_string(s)));
  for (std::uint64_t s = 50; s < 60; ++s) {
    const auto src = render(synth::random_video(s, 1.0, 224), "s");
    std::map<std::string, double> prev;
    for (double tau : {0.99, 0.97, 0.95, 0.9, 0.8, 0.6}) {
      std::map<std::string, double> cur;
      for (const auto& t : overlap(src, idx, tau, true)) cur[t.target_id] = t.overlap_pct;
      for (const auto& [id, pct] : prev) EXPECT_GE(cur[id], pct) << id << " tau " << tau;
      prev = cur;
    }
  }
}

TEST(Lsh, ExhaustiveMatchesOracleAndLshRecall) {
  // 6 targets x 32 frames = 192 indexed frames.
  LshIndex idx({16, 8, 12});
  std::vector<SignatureSequence> targets;
  for (std::uint64_t s = 60; s < 66; ++s) {
    targets.push_back(render(synth::random_video(s, 2.0), "t" + std::to_string(s)));
    index_insert(idx, targets.back());
  }
  ASSERT_LE(idx.size(), 200u);
  std::size_t oracle_total = 0, lsh_found = 0;
  for (std::uint64_t s = 60; s < 70; ++s) {
    const auto q = render(synth::random_video(s, 2.0, 224), "q");
    for (const auto& v : q.frames) {
      std::vector<FrameRef> oracle;
      for (const auto& t : targets)
        for (std::size_t i = 0; i < t.frames.size(); ++i)
          if (oracle::cosine(v, t.frames[i]) >= 0.9) oracle.push_back({t.video_id, i});
      std::sort(oracle.begin(), oracle.end());
      ASSERT_EQ(idx.match_exhaustive(v, 0.9), oracle);
      const auto lsh = frame_match(idx, v, 0.9);
      for (const auto& m : lsh) ASSERT_TRUE(std::binary_search(oracle.begin(), oracle.end(), m));
      oracle_total += oracle.size();
      lsh_found += lsh.size();
    }
  }
  ASSERT_GT(oracle_total, 0u);
  EXPECT_GE(double(lsh_found) / double(oracle_total), 0.95);
}

std::vector<VideoInput> video_inputs(std::uint64_t first, std::uint64_t count, const std::string& prefix) {
  std::vector<VideoInput> out;
  for (std::uint64_t s = first; s < first + count; ++s) {
    out.push_back({prefix + std::to_string(s),
                   std::make_shared<synth::GratingVideo>(synth::random_video(s, 1.0))});
  }
  return out;
}

TEST(Report, DisjointCorporaFlagNothing) {
  const auto report = dedup_report(video_inputs(100, 4, "s"), video_inputs(200, 4, "t"));
  EXPECT_TRUE(report.flagged.empty());
  EXPECT_EQ(report.kept_sources.size(), 4u);
}

TEST(Report, ThresholdZeroFlagsEveryPair) {
  DedupParams params;
  params.threshold_pct = 0.0;
  params.tau = 0.5;
  const auto report = dedup_report(video_inputs(300, 4, "s"), video_inputs(300, 3, "t"), params);
  EXPECT_FALSE(report.pairs.empty());
  ASSERT_EQ(report.flagged.size(), report.pairs.size());
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    EXPECT_EQ(report.flagged[i].source_id, report.pairs[i].source_id);
    EXPECT_GT(report.pairs[i].overlap_pct, 0.0);
    EXPECT_LE(report.pairs[i].overlap_pct, 100.0);
  }
}

TEST(Report, InjectedDuplicatesAreFlaggedAndWritten) {
  auto sources = video_inputs(400, 6, "s");
  const auto targets = video_inputs(500, 6, "t");
  for (std::uint64_t k = 0; k < 2; ++k) {
    auto p = synth::random_video(500 + k, 1.0, 224);
    p.duration_s = 0.5;
    p.time_offset_s = 0.25;
    sources.push_back({"dup" + std::to_string(k), std::make_shared<synth::GratingVideo>(p)});
  }
  const auto report = dedup_report(sources, targets);
  std::set<std::string> flagged;
  for (const auto& f : report.flagged) {
    flagged.insert(f.source_id);
    EXPECT_GE(f.overlap_pct, 20.0);
  }
  EXPECT_TRUE(flagged.contains("dup0"));
  EXPECT_TRUE(flagged.contains("dup1"));
  for (const auto& k : report.kept_sources) EXPECT_FALSE(flagged.contains(k));
  EXPECT_EQ(report.kept_sources.size() + flagged.size(), sources.size());

  const auto dir = corpusforge::testing::scratch_dir();
  write_report(report, dir);
  std::ifstream in(dir / "report.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, report.pairs.size());
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "kept_sources.txt"));
}

TEST(RawFrames, FileRoundTrip) {
  const synth::GratingVideo video(synth::random_video(600, 0.5, 64, 24.0));
  const auto path = corpusforge::testing::scratch_dir() / "v.cfvd";
  write_raw_frames(video, path);
  const auto back = read_raw_frames(path);
  ASSERT_EQ(back->frame_count(), video.frame_count());
  EXPECT_EQ(back->fps(), 24.0);
  for (std::size_t i = 0; i < video.frame_count(); ++i) EXPECT_EQ(back->frame(i).pixels, video.frame(i).pixels);
}

TEST(RawFrames, TruncatedFileThrows) {
  const auto path = corpusforge::testing::scratch_dir() / "bad.cfvd";
  corpusforge::testing::write_text(path, "CFVD\x10");
  EXPECT_THROW(read_raw_frames(path), ParseError);
  corpusforge::testing::write_text(path, "NOPE0000000000000000");
  EXPECT_THROW(read_raw_frames(path), ParseError);
}

}  // namespace
}  // namespace corpusforge::dedup
