#include "corpusforge/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "corpusforge/error.hpp"
#include "corpusforge/manifest.hpp"
#include "corpusforge/parallel.hpp"
#include "corpusforge/rng.hpp"
#include "json.hpp"

namespace corpusforge::dedup {

namespace {

// (dy, dx) clockwise from top-left; neighbour i sets bit i.
constexpr int kNeighbors[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}};

double dot(const Signature& a, const Signature& b) {
  double s = 0.0;
  for (int i = 0; i < kSignatureDim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Signature census_signature(const Image& frame, int side) {
  if (frame.channels != 1 || frame.width != side || frame.height != side || side < 3) {
    throw ValidationError("census_signature: expected a " + std::to_string(side) + "x" +
                          std::to_string(side) + " gray frame, got " + std::to_string(frame.width) + "x" +
                          std::to_string(frame.height) + "x" + std::to_string(frame.channels));
  }
  std::array<std::uint64_t, 256> hist{};
  for (int y = 1; y + 1 < frame.height; ++y) {
    for (int x = 1; x + 1 < frame.width; ++x) {
      const std::uint8_t center = frame.at(y, x);
      unsigned code = 0;
      for (int i = 0; i < 8; ++i) {
        if (frame.at(y + kNeighbors[i][0], x + kNeighbors[i][1]) > center) code |= 1u << i;
      }
      ++hist[code];
    }
  }
  Signature sig{};
  for (int code = 0; code < 256; ++code) sig[code / 4] += static_cast<double>(hist[code]);
  const double total = static_cast<double>(frame.width - 2) * (frame.height - 2);
  for (auto& v : sig) v /= total;
  return sig;
}

double cosine(const Signature& a, const Signature& b) {
  const double na = dot(a, a);
  const double nb = dot(b, b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / std::sqrt(na * nb);
}

SignatureSequence decode_frames(const std::string& video_id, const FrameSource& video, const DecodeOptions& opts) {
  const std::size_t n = video.frame_count();
  if (n == 0) throw ValidationError("decode_frames: video '" + video_id + "' has no frames");
  if (!(opts.target_fps > 0.0)) throw ValidationError("decode_frames: target fps must be > 0");
  const double ratio = video.fps() / opts.target_fps;
  const auto out_count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n / ratio)));
  SignatureSequence seq{video_id, {}};
  seq.frames.reserve(out_count);
  for (std::size_t j = 0; j < out_count; ++j) {
    const auto src = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::llround(j * ratio)));
    const Image gray = to_gray(video.frame(src));
    seq.frames.push_back(census_signature(resize_bilinear(gray, opts.side, opts.side), opts.side));
  }
  return seq;
}

LshIndex::LshIndex(const LshParams& params) : params_(params) {
  if (params.bands < 1 || params.bits < 1 || params.bits > 32) {
    throw ValidationError("LSH: need bands >= 1 and 1 <= bits <= 32");
  }
  Rng rng(derive_seed(params.seed, "lsh-planes"));
  planes_.resize(static_cast<std::size_t>(params.bands) * params.bits);
  for (auto& p : planes_) {
    double norm = 0.0;
    for (auto& x : p) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : p) x /= norm;
  }
  tables_.resize(params.bands);
}

std::uint32_t LshIndex::band_key(const Signature& v, int band) const {
  std::uint32_t key = 0;
  for (int j = 0; j < params_.bits; ++j) {
    if (dot(planes_[static_cast<std::size_t>(band) * params_.bits + j], v) >= 0.0) key |= 1u << j;
  }
  return key;
}

void LshIndex::insert(const SignatureSequence& seq) {
  const auto video = static_cast<std::uint32_t>(videos_.size());
  videos_.push_back(seq.video_id);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto id = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back({video, static_cast<std::uint32_t>(f), seq.frames[f]});
    for (int b = 0; b < params_.bands; ++b) tables_[b][band_key(seq.frames[f], b)].push_back(id);
  }
}

std::vector<std::uint32_t> LshIndex::candidates(const Signature& v) const {
  std::vector<std::uint32_t> out;
  for (int b = 0; b < params_.bands; ++b) {
    auto it = tables_[b].find(band_key(v, b));
    if (it != tables_[b].end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<FrameRef> LshIndex::match(const Signature& v, double tau) const {
  std::vector<FrameRef> out;
  for (auto id : candidates(v)) {
    const auto& e = entries_[id];
    if (cosine(v, e.vec) >= tau) out.push_back({videos_[e.video], e.frame});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FrameRef> LshIndex::match_exhaustive(const Signature& v, double tau) const {
  std::vector<FrameRef> out;
  for (const auto& e : entries_) {
    if (cosine(v, e.vec) >= tau) out.push_back({videos_[e.video], e.frame});
  }
  std::sort(out.begin(), out.end());
  return out;
}

void index_insert(LshIndex& idx, const SignatureSequence& seq) { idx.insert(seq); }

std::vector<FrameRef> frame_match(const LshIndex& idx, const Signature& v, double tau) {
  return idx.match(v, tau);
}

std::vector<TargetOverlap> overlap(const SignatureSequence& source, const LshIndex& idx, double tau,
                                   bool exhaustive) {
  if (source.frames.empty()) throw ValidationError("overlap: source '" + source.video_id + "' has no frames");
  std::map<std::string, std::size_t> hits;
  for (const auto& frame : source.frames) {
    const auto matches = exhaustive ? idx.match_exhaustive(frame, tau) : idx.match(frame, tau);
    // matches are sorted by video id, so each target is counted once per frame.
    const std::string* last = nullptr;
    for (const auto& m : matches) {
      if (last && *last == m.video_id) continue;
      ++hits[m.video_id];
      last = &m.video_id;
    }
  }
  std::vector<TargetOverlap> out;
  const double n = static_cast<double>(source.frames.size());
  for (const auto& [target, count] : hits) out.push_back({target, 100.0 * static_cast<double>(count) / n});
  return out;
}

OverlapReport dedup_signatures(const std::vector<SignatureSequence>& sources,
                               const std::vector<SignatureSequence>& targets, const DedupParams& params) {
  LshIndex idx(params.lsh);
  for (const auto& t : targets) idx.insert(t);

  std::vector<std::vector<TargetOverlap>> per_source(sources.size());
  parallel_for(sources.size(), params.threads,
               [&](std::size_t i) { per_source[i] = overlap(sources[i], idx, params.tau); });

  OverlapReport report;
  report.params = params;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    bool flagged = false;
    for (const auto& o : per_source[i]) {
      OverlapPair pair{sources[i].video_id, o.target_id, o.overlap_pct};
      if (o.overlap_pct >= params.threshold_pct) {
        report.flagged.push_back(pair);
        flagged = true;
      }
      report.pairs.push_back(std::move(pair));
    }
    if (!flagged) report.kept_sources.push_back(sources[i].video_id);
  }
  return report;
}

OverlapReport dedup_report(const std::vector<VideoInput>& sources, const std::vector<VideoInput>& targets,
                           const DedupParams& params) {
  auto decode_all = [&](const std::vector<VideoInput>& videos) {
    std::vector<SignatureSequence> out(videos.size());
    parallel_for(videos.size(), params.threads,
                 [&](std::size_t i) { out[i] = decode_frames(videos[i].id, *videos[i].source, params.decode); });
    return out;
  };
  return dedup_signatures(decode_all(sources), decode_all(targets), params);
}

void write_report(const OverlapReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("report.jsonl");
    for (const auto& p : report.pairs) {
      out << "{\"source_id\":" << nlohmann::json(p.source_id).dump()
          << ",\"target_id\":" << nlohmann::json(p.target_id).dump()
          << ",\"overlap_pct\":" << format_fixed6(p.overlap_pct) << "}\n";
    }
  }
  {
    nlohmann::json s;
    s["tau"] = report.params.tau;
    s["threshold_pct"] = report.params.threshold_pct;
    s["bands"] = report.params.lsh.bands;
    s["bits"] = report.params.lsh.bits;
    s["seed"] = report.params.lsh.seed;
    s["fps"] = report.params.decode.target_fps;
    s["side"] = report.params.decode.side;
    s["pairs"] = report.pairs.size();
    s["flagged"] = report.flagged.size();
    s["kept_sources"] = report.kept_sources.size();
    auto out = open("summary.json");
    out << s.dump(2) << "\n";
  }
  {
    auto out = open("kept_sources.txt");
    for (const auto& id : report.kept_sources) out << id << "\n";
  }
}

}  // namespace corpusforge::dedup
