#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpusforge/frames.hpp"

namespace corpusforge::dedup {

inline constexpr int kSignatureDim = 64;
inline constexpr int kFrameSide = 112;
inline constexpr double kDecodeFps = 16.0;

using Signature = std::array<double, kSignatureDim>;

/// Census-code histogram of one frame.
///
/// Every interior pixel gets an 8-bit code whose bit i is set when the i-th
/// neighbour (clockwise from top-left: TL T TR R BR B BL L) is strictly
/// brighter than the centre. Codes are counted in 256 bins, folded to 64
/// (bin = code / 4) and L1-normalized. Throws unless the frame is
/// side x side grayscale.
Signature census_signature(const Image& frame, int side = kFrameSide);

double cosine(const Signature& a, const Signature& b);

struct SignatureSequence {
  std::string video_id;
  std::vector<Signature> frames;
};

struct DecodeOptions {
  double target_fps = kDecodeFps;
  int side = kFrameSide;
};

/// Resamples to target_fps (nearest timestamp), converts to gray, resizes
/// bilinearly to side x side and computes one signature per frame.
SignatureSequence decode_frames(const std::string& video_id, const FrameSource& video,
                                const DecodeOptions& opts = {});

struct FrameRef {
  std::string video_id;
  std::size_t frame_idx = 0;

  bool operator==(const FrameRef&) const = default;
  auto operator<=>(const FrameRef&) const = default;
};

struct LshParams {
  int bands = 16;
  int bits = 8;  // per band, <= 32
  std::uint64_t seed = 0;
};

/// Random-hyperplane LSH over frame signatures. Inserts are single-writer;
/// once built, queries are const and safe to run concurrently.
class LshIndex {
 public:
  explicit LshIndex(const LshParams& params = {});

  const LshParams& params() const { return params_; }
  std::size_t size() const { return entries_.size(); }

  /// r-bit key of `v` in band `band`: bit j is the sign of the dot product
  /// with hyperplane band*r + j.
  std::uint32_t band_key(const Signature& v, int band) const;

  void insert(const SignatureSequence& seq);

  /// Entry ids sharing at least one band key with `v`.
  std::vector<std::uint32_t> candidates(const Signature& v) const;

  /// Candidates verified by exact cosine >= tau, sorted.
  std::vector<FrameRef> match(const Signature& v, double tau) const;

  /// Same contract as match() but scanning every stored frame.
  std::vector<FrameRef> match_exhaustive(const Signature& v, double tau) const;

  const std::vector<std::string>& video_ids() const { return videos_; }

  struct Entry {
    std::uint32_t video;
    std::uint32_t frame;
    Signature vec;
  };
  const Entry& entry(std::uint32_t id) const { return entries_[id]; }

 private:
  LshParams params_;
  std::vector<Signature> planes_;
  std::vector<std::string> videos_;
  std::vector<Entry> entries_;
  std::vector<std::unordered_map<std::uint32_t, std::vector<std::uint32_t>>> tables_;
};

void index_insert(LshIndex& idx, const SignatureSequence& seq);

std::vector<FrameRef> frame_match(const LshIndex& idx, const Signature& v, double tau = 0.9);

struct TargetOverlap {
  std::string target_id;
  double overlap_pct = 0.0;
};

/// For every target with at least one matching frame: percentage of source
/// frames that match some frame of that target. Sorted by target id.
std::vector<TargetOverlap> overlap(const SignatureSequence& source, const LshIndex& idx, double tau = 0.9,
                                   bool exhaustive = false);

struct OverlapPair {
  std::string source_id;
  std::string target_id;
  double overlap_pct = 0.0;
};

struct DedupParams {
  double tau = 0.9;
  double threshold_pct = 20.0;
  LshParams lsh;
  DecodeOptions decode;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct OverlapReport {
  std::vector<OverlapPair> pairs;    // every pair with overlap > 0
  std::vector<OverlapPair> flagged;  // overlap >= threshold
  std::vector<std::string> kept_sources;
  DedupParams params;
};

struct VideoInput {
  std::string id;
  std::shared_ptr<const FrameSource> source;
};

OverlapReport dedup_signatures(const std::vector<SignatureSequence>& sources,
                               const std::vector<SignatureSequence>& targets, const DedupParams& params);

/// Decodes both sides (in parallel) and runs dedup_signatures.
OverlapReport dedup_report(const std::vector<VideoInput>& sources, const std::vector<VideoInput>& targets,
                           const DedupParams& params = {});

/// Writes report.jsonl, summary.json and kept_sources.txt into `dir`.
void write_report(const OverlapReport& report, const std::filesystem::path& dir);

}  // namespace corpusforge::dedup
