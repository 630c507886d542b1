#include "corpusforge/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "corpusforge/error.hpp"
#include "json.hpp"

namespace corpusforge {

using nlohmann::json;

namespace {

// Tolerance for containment checks against durations after quantization.
constexpr double kTimeSlack = 1e-6;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  std::initializer_list<const char*> required, std::size_t line) {
  if (!obj.is_object()) throw ParseError("expected a JSON object", line);
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ParseError("unknown field '" + key + "'", line);
    }
  }
  for (const char* key : required) {
    if (!obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line);
  }
}

template <typename T>
T get_field(const json& obj, const char* key, std::size_t line) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type", line);
  }
}

double get_number(const json& obj, const char* key, std::size_t line) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number", line);
  return v.get<double>();
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line);
  }
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::string to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::Seed: return "seed";
    case LabelKind::Verb: return "verb";
    case LabelKind::Noun: return "noun";
    case LabelKind::VerbNoun: return "verbnoun";
  }
  return "seed";
}

LabelKind parse_label_kind(const std::string& s) {
  const std::string k = lowercase(s);
  if (k == "seed") return LabelKind::Seed;
  if (k == "verb") return LabelKind::Verb;
  if (k == "noun") return LabelKind::Noun;
  if (k == "verbnoun" || k == "verb+noun") return LabelKind::VerbNoun;
  throw ParseError("unknown label kind '" + s + "'");
}

HashtagIndex::HashtagIndex(const LabelSpace& space) {
  labels_.reserve(space.entries.size());
  for (const auto& [label, tags] : space.entries) {
    const std::size_t idx = labels_.size();
    labels_.push_back(label);
    for (const auto& tag : tags) by_tag_[tag].push_back(idx);
  }
}

std::vector<std::string> HashtagIndex::matched_labels(const VideoRecord& v) const {
  std::vector<std::size_t> hits;
  for (const auto& tag : v.hashtags) {
    auto it = by_tag_.find(tag);
    if (it != by_tag_.end()) hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  // labels_ is sorted (built from a std::map), so index order is label order.
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (auto i : hits) out.push_back(labels_[i]);
  return out;
}

std::uint64_t LabelHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

LabelHistogram label_histogram(const Corpus& corpus, const LabelSpace& space) {
  LabelHistogram h;
  for (const auto& [label, _] : space.entries) h.counts[label] = 0;
  const HashtagIndex index(space);
  for (const auto& v : corpus) {
    for (const auto& label : index.matched_labels(v)) ++h.counts[label];
  }
  return h;
}

double quantize_seconds(double s) {
  const double q = std::round(s * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

std::string format_fixed6(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void DatasetManifest::add_row(std::string video_id, std::string label, double clip_start_s,
                              double clip_len_s) {
  rows.push_back({std::move(video_id), std::move(label), quantize_seconds(clip_start_s),
                  quantize_seconds(clip_len_s)});
}

void validate_manifest(const DatasetManifest& m, const Corpus* corpus, const LabelSpace* space) {
  std::unordered_map<std::string, const VideoRecord*> by_id;
  if (corpus) {
    for (const auto& v : *corpus) by_id.emplace(v.id, &v);
  }
  std::set<std::pair<std::string, double>> seen;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& r = m.rows[i];
    const std::string where = "row " + std::to_string(i + 1) + " (" + r.video_id + "): ";
    if (r.video_id.empty()) throw ValidationError(where + "empty video_id");
    if (r.label.empty()) throw ValidationError(where + "empty label");
    if (!std::isfinite(r.clip_start_s) || r.clip_start_s < 0.0) {
      throw ValidationError(where + "clip_start_s must be >= 0");
    }
    if (!std::isfinite(r.clip_len_s) || r.clip_len_s <= 0.0) {
      throw ValidationError(where + "clip_len_s must be > 0");
    }
    if (!seen.emplace(r.video_id, r.clip_start_s).second) {
      throw ValidationError(where + "duplicate (video_id, clip_start_s)");
    }
    if (corpus) {
      auto it = by_id.find(r.video_id);
      if (it == by_id.end()) throw ValidationError(where + "unknown video id");
      if (r.clip_start_s + r.clip_len_s > it->second->duration_s + kTimeSlack) {
        throw ValidationError(where + "clip window exceeds video duration");
      }
    }
    if (space && !space->entries.contains(r.label)) {
      throw ValidationError(where + "label '" + r.label + "' not in label space");
    }
  }
}

std::string manifest_to_jsonl(const DatasetManifest& m) {
  std::string out;
  out += "{\"format\":";
  out += json(kManifestFormat).dump();
  out += ",\"seed\":" + std::to_string(m.seed);
  out += ",\"provenance\":";
  json prov = json::object();
  for (const auto& [k, v] : m.provenance) prov[k] = v;
  out += prov.dump();
  out += "}\n";
  for (const auto& r : m.rows) {
    out += "{\"video_id\":" + json(r.video_id).dump();
    out += ",\"label\":" + json(r.label).dump();
    out += ",\"clip_start_s\":" + format_fixed6(r.clip_start_s);
    out += ",\"clip_len_s\":" + format_fixed6(r.clip_len_s);
    out += "}\n";
  }
  return out;
}

DatasetManifest manifest_from_jsonl(std::istream& in) {
  DatasetManifest m;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::set<std::pair<std::string, double>> seen;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json obj = parse_line(text, line);
    if (!have_header) {
      require_keys(obj, {"format", "seed", "provenance"}, {"format", "seed", "provenance"}, line);
      if (get_field<std::string>(obj, "format", line) != kManifestFormat) {
        throw ParseError("unsupported manifest format", line);
      }
      if (!obj.at("seed").is_number_unsigned()) throw ParseError("seed must be a u64", line);
      m.seed = obj.at("seed").get<std::uint64_t>();
      if (!obj.at("provenance").is_object()) throw ParseError("provenance must be an object", line);
      for (const auto& [k, v] : obj.at("provenance").items()) {
        if (!v.is_string()) throw ParseError("provenance values must be strings", line);
        m.provenance[k] = v.get<std::string>();
      }
      have_header = true;
      continue;
    }
    require_keys(obj, {"video_id", "label", "clip_start_s", "clip_len_s"},
                 {"video_id", "label", "clip_start_s", "clip_len_s"}, line);
    ManifestRow row{get_field<std::string>(obj, "video_id", line),
                    get_field<std::string>(obj, "label", line),
                    quantize_seconds(get_number(obj, "clip_start_s", line)),
                    quantize_seconds(get_number(obj, "clip_len_s", line))};
    if (row.clip_start_s < 0.0) throw ValidationError("line " + std::to_string(line) + ": clip_start_s must be >= 0");
    if (row.clip_len_s <= 0.0) throw ValidationError("line " + std::to_string(line) + ": clip_len_s must be > 0");
    if (!seen.emplace(row.video_id, row.clip_start_s).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate (video_id, clip_start_s)");
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  return manifest_from_jsonl(in);
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path, const Corpus* corpus) {
  validate_manifest(m, corpus);
  write_file(path, manifest_to_jsonl(m));
}

Corpus corpus_from_jsonl(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json obj = parse_line(text, line);
    require_keys(obj, {"id", "duration_s", "hashtags", "frame_rate", "source_uri"},
                 {"id", "duration_s", "hashtags"}, line);
    VideoRecord v;
    v.id = get_field<std::string>(obj, "id", line);
    v.duration_s = get_number(obj, "duration_s", line);
    for (const auto& tag : get_field<std::vector<std::string>>(obj, "hashtags", line)) {
      std::string t = lowercase(tag);
      if (!t.empty() && t.front() == '#') t.erase(0, 1);
      if (!t.empty()) v.hashtags.insert(std::move(t));
    }
    if (obj.contains("frame_rate")) v.frame_rate = get_number(obj, "frame_rate", line);
    if (obj.contains("source_uri") && !obj.at("source_uri").is_null()) {
      v.source_uri = get_field<std::string>(obj, "source_uri", line);
    }
    if (v.id.empty()) throw ValidationError("line " + std::to_string(line) + ": empty id");
    if (!(v.duration_s > 0.0)) throw ValidationError("line " + std::to_string(line) + ": duration_s must be > 0");
    if (!(v.frame_rate > 0.0)) throw ValidationError("line " + std::to_string(line) + ": frame_rate must be > 0");
    if (!ids.insert(v.id).second) throw ValidationError("line " + std::to_string(line) + ": duplicate id '" + v.id + "'");
    corpus.push_back(std::move(v));
  }
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& v : corpus) {
    json obj;
    obj["id"] = v.id;
    obj["duration_s"] = v.duration_s;
    obj["hashtags"] = v.hashtags;
    obj["frame_rate"] = v.frame_rate;
    obj["source_uri"] = v.source_uri ? json(*v.source_uri) : json(nullptr);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return corpus_from_jsonl(in);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, corpus_to_jsonl(corpus));
}

}  // namespace corpusforge
