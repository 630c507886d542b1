#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace corpusforge {

/// One corpus video.
struct VideoRecord {
  std::string id;
  double duration_s = 0.0;
  std::set<std::string> hashtags;  // lowercase, no '#'
  double frame_rate = 16.0;
  std::optional<std::string> source_uri;

  bool operator==(const VideoRecord&) const = default;
};

using Corpus = std::vector<VideoRecord>;

enum class LabelKind { Seed, Verb, Noun, VerbNoun };

std::string to_string(LabelKind kind);
LabelKind parse_label_kind(const std::string& s);

/// Seed labels mapped to the hashtags that count as evidence for them.
struct LabelSpace {
  std::string name;
  LabelKind kind = LabelKind::Seed;
  std::map<std::string, std::set<std::string>> entries;
  int min_count = 50;

  bool operator==(const LabelSpace&) const = default;
};

/// Reverse lookup hashtag -> labels, built once per label space.
class HashtagIndex {
 public:
  explicit HashtagIndex(const LabelSpace& space);

  /// Labels (sorted, unique) whose hashtag sets intersect the video's.
  std::vector<std::string> matched_labels(const VideoRecord& v) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_tag_;
};

struct LabelHistogram {
  std::map<std::string, std::uint64_t> counts;

  std::uint64_t total() const;
  bool operator==(const LabelHistogram&) const = default;
};

/// Number of videos matching each label; a video may count for several.
LabelHistogram label_histogram(const Corpus& corpus, const LabelSpace& space);

struct ManifestRow {
  std::string video_id;
  std::string label;
  double clip_start_s = 0.0;
  double clip_len_s = 0.0;

  bool operator==(const ManifestRow&) const = default;
};

/// Times are stored at microsecond resolution so that the 6-decimal text
/// form round-trips exactly.
double quantize_seconds(double s);

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::map<std::string, std::string> provenance;
  std::uint64_t seed = 0;

  /// Appends a row with quantized times.
  void add_row(std::string video_id, std::string label, double clip_start_s, double clip_len_s);

  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr const char* kManifestFormat = "corpusforge-manifest-v1";

/// Checks row invariants; with a corpus also checks ids and containment,
/// with a label space also checks labels. Throws ValidationError.
void validate_manifest(const DatasetManifest& m, const Corpus* corpus = nullptr,
                       const LabelSpace* space = nullptr);

std::string manifest_to_jsonl(const DatasetManifest& m);
DatasetManifest manifest_from_jsonl(std::istream& in);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path,
                   const Corpus* corpus = nullptr);

/// Corpus JSONL: one VideoRecord object per line.
Corpus corpus_from_jsonl(std::istream& in);
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Fixed 6-decimal rendering used in every text output.
std::string format_fixed6(double v);

}  // namespace corpusforge
