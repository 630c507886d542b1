#include "corpusforge/labelspace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "corpusforge/error.hpp"
#include "json.hpp"

namespace corpusforge::labelspace {

namespace {

constexpr std::array<std::string_view, 8> kStopwords = {"a", "an", "the", "of",
                                                        "on", "in", "to", "with"};

bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Porter's consonant test: 'y' is a consonant at the start or after a vowel.
bool is_consonant(std::string_view w, std::size_t i) {
  const char c = w[i];
  if (is_vowel_letter(c)) return false;
  if (c == 'y') return i == 0 || !is_consonant(w, i - 1);
  return true;
}

bool has_vowel(std::string_view w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!is_consonant(w, i)) return true;
  }
  return false;
}

// Number of vowel-run/consonant-run pairs ([C](VC)^m[V]).
int measure(std::string_view w) {
  int m = 0;
  std::size_t i = 0;
  while (i < w.size() && is_consonant(w, i)) ++i;
  while (i < w.size()) {
    while (i < w.size() && !is_consonant(w, i)) ++i;
    if (i == w.size()) break;
    while (i < w.size() && is_consonant(w, i)) ++i;
    ++m;
  }
  return m;
}

bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// Consonant-vowel-consonant ending where the last consonant is not w, x, y.
bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
  const char last = w[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

bool undoublable(std::string_view w) {
  const char c = w.back();
  return ends_double_consonant(w) && c != 'l' && c != 's' && c != 'z';
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

std::string ing_form(const std::string& stem) {
  if (ends_with(stem, "ing")) return stem;
  if (stem.size() > 2 && stem.back() == 'e' && !ends_with(stem, "ee")) {
    return stem.substr(0, stem.size() - 1) + "ing";
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + stem.back() + "ing";
  return stem + "ing";
}

std::string plural_form(const std::string& stem) {
  if (ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") ||
      ends_with(stem, "ch") || ends_with(stem, "sh")) {
    return stem + "es";
  }
  return stem + "s";
}

std::string normalize_phrase(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word, out;
  while (in >> word) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

void collect_orders(const std::vector<std::vector<std::string>>& variants,
                    const std::vector<std::size_t>& order, std::set<std::string>& out) {
  // Odometer over one variant choice per content word.
  std::vector<std::size_t> pick(variants.size(), 0);
  for (;;) {
    std::string tag;
    for (auto w : order) tag += variants[w][pick[w]];
    out.insert(std::move(tag));
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == variants[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
}

SeedLabel combine(const SeedLabel& verb, const SeedLabel& noun) {
  SeedLabel out;
  std::string verb_part, noun_part;
  for (const auto& w : verb.words) {
    if (w.pos == PosHint::Stopword) continue;
    verb_part += (verb_part.empty() ? "" : " ") + w.stem;
  }
  for (const auto& w : noun.words) {
    if (w.pos == PosHint::Stopword) continue;
    noun_part += (noun_part.empty() ? "" : " ") + w.stem;
  }
  out.text = verb_part + " " + noun_part;
  out.words = verb.words;
  out.words.insert(out.words.end(), noun.words.begin(), noun.words.end());
  return out;
}

bool seed_has_pos(const SeedLabel& s, PosHint pos) {
  return std::any_of(s.words.begin(), s.words.end(), [&](const WordForm& w) { return w.pos == pos; });
}

}  // namespace

bool is_stopword(std::string_view word) {
  return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::string stem(std::string_view word) {
  std::string w(word);
  if (w.size() > 4 && ends_with(w, "ing") && has_vowel(std::string_view(w).substr(0, w.size() - 3))) {
    w.resize(w.size() - 3);
    if (undoublable(w)) w.pop_back();
    return w;
  }
  if (w.size() > 4 && ends_with(w, "ed") && has_vowel(std::string_view(w).substr(0, w.size() - 2))) {
    w.resize(w.size() - 2);
    if (undoublable(w)) {
      w.pop_back();
    } else if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") ||
               (measure(w) == 1 && ends_cvc(w))) {
      w += 'e';
    }
    return w;
  }
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss")) {
    w.pop_back();
  }
  return w;
}

WordForm canonicalize(std::string_view word, PosHint hint) {
  std::string surface;
  for (unsigned char c : word) {
    if (std::isalpha(c)) surface += static_cast<char>(std::tolower(c));
  }
  if (surface.empty()) {
    throw ValidationError("word '" + std::string(word) + "' has no letters");
  }
  WordForm out;
  out.pos = is_stopword(surface) ? PosHint::Stopword : hint;
  out.stem = out.pos == PosHint::Stopword ? surface : stem(surface);
  out.surface = std::move(surface);
  return out;
}

std::set<std::string> word_variants(const WordForm& w) {
  std::set<std::string> out{w.surface, w.stem};
  if (w.pos == PosHint::Noun) out.insert(plural_form(w.stem));
  if (w.pos == PosHint::Verb) out.insert(ing_form(w.stem));
  return out;
}

SeedLabel parse_seed(std::string_view line, PosHint default_hint) {
  SeedLabel out;
  std::istringstream in{std::string(line)};
  std::string token;
  std::vector<std::string> plain;
  while (in >> token) {
    PosHint hint = default_hint;
    const auto cut = token.find_first_of("/|");
    if (cut != std::string::npos) {
      std::string tag = token.substr(cut + 1);
      std::transform(tag.begin(), tag.end(), tag.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (tag == "v" || tag == "verb") {
        hint = PosHint::Verb;
      } else if (tag == "n" || tag == "noun") {
        hint = PosHint::Noun;
      } else {
        throw ParseError("unknown part-of-speech tag '" + tag + "' in seed '" + std::string(line) + "'");
      }
      token.resize(cut);
    }
    out.words.push_back(canonicalize(token, hint));
    plain.push_back(out.words.back().surface);
  }
  if (out.words.empty()) throw ValidationError("empty seed label");
  for (const auto& p : plain) out.text += (out.text.empty() ? "" : " ") + p;
  return out;
}

std::set<std::string> relevant_hashtags(const SeedLabel& label, const HashtagOptions& opts) {
  std::vector<std::vector<std::string>> variants;
  std::string phrase;
  for (const auto& w : label.words) {
    phrase += w.surface;
    if (w.pos == PosHint::Stopword) continue;
    const auto v = word_variants(w);
    variants.emplace_back(v.begin(), v.end());
  }
  if (variants.empty()) {
    throw ValidationError("seed '" + label.text + "' has only stopwords");
  }
  std::set<std::string> out{phrase};
  std::vector<std::size_t> order(variants.size());
  std::iota(order.begin(), order.end(), 0);
  if (opts.all_orders) {
    do {
      collect_orders(variants, order, out);
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    collect_orders(variants, order, out);
    std::reverse(order.begin(), order.end());
    collect_orders(variants, order, out);
  }
  return out;
}

LabelSpace build_label_space(const std::vector<SeedLabel>& seeds, LabelKind kind,
                             const Corpus& corpus, int min_count, const HashtagOptions& opts,
                             std::string name) {
  if (seeds.empty()) throw ValidationError("no seed labels");
  if (min_count < 1) throw ValidationError("min_count must be >= 1");

  std::vector<SeedLabel> candidates;
  if (kind == LabelKind::VerbNoun) {
    std::vector<const SeedLabel*> verbs, nouns;
    for (const auto& s : seeds) {
      if (seed_has_pos(s, PosHint::Verb)) {
        verbs.push_back(&s);
      } else if (seed_has_pos(s, PosHint::Noun)) {
        nouns.push_back(&s);
      } else {
        throw ValidationError("verb+noun seed '" + s.text + "' needs a /v or /n tag");
      }
    }
    if (verbs.empty() || nouns.empty()) {
      throw ValidationError("verb+noun label space needs both verb and noun seeds");
    }
    for (const auto* v : verbs) {
      for (const auto* n : nouns) candidates.push_back(combine(*v, *n));
    }
  } else {
    candidates = seeds;
  }

  LabelSpace space;
  space.name = name.empty() ? to_string(kind) : std::move(name);
  space.kind = kind;
  space.min_count = min_count;
  for (const auto& c : candidates) {
    auto tags = relevant_hashtags(c, opts);
    space.entries[normalize_phrase(c.text)].merge(tags);
  }

  const auto counts = label_histogram(corpus, space).counts;
  std::erase_if(space.entries, [&](const auto& kv) {
    return counts.at(kv.first) < static_cast<std::uint64_t>(min_count);
  });
  if (space.entries.empty()) throw ValidationError("empty label space");
  return space;
}

std::vector<SeedLabel> load_seeds(const std::filesystem::path& path, LabelKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const PosHint hint = kind == LabelKind::Verb   ? PosHint::Verb
                       : kind == LabelKind::Noun ? PosHint::Noun
                                                 : PosHint::Other;
  std::vector<SeedLabel> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(parse_seed(line, hint));
    } catch (const Error& e) {
      throw ParseError(e.what(), n);
    }
  }
  return out;
}

void validate_label_space(const LabelSpace& space) {
  if (space.min_count < 1) throw ValidationError("min_count must be >= 1");
  for (const auto& [label, tags] : space.entries) {
    if (tags.empty()) throw ValidationError("label '" + label + "' has no hashtags");
    for (const auto& t : tags) {
      if (t.empty() || t.find('#') != std::string::npos ||
          std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); })) {
        throw ValidationError("label '" + label + "' has invalid hashtag '" + t + "'");
      }
    }
  }
}

std::string label_space_to_json(const LabelSpace& space) {
  nlohmann::json j;
  j["name"] = space.name;
  j["kind"] = to_string(space.kind);
  j["min_count"] = space.min_count;
  j["entries"] = nlohmann::json::object();
  for (const auto& [label, tags] : space.entries) j["entries"][label] = tags;
  return j.dump(2) + "\n";
}

LabelSpace label_space_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("label space: ") + e.what());
  }
  LabelSpace space;
  try {
    space.name = j.at("name").get<std::string>();
    space.kind = parse_label_kind(j.at("kind").get<std::string>());
    space.min_count = j.at("min_count").get<int>();
    for (const auto& [label, tags] : j.at("entries").items()) {
      space.entries[label] = tags.get<std::set<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("label space: ") + e.what());
  }
  validate_label_space(space);
  return space;
}

LabelSpace load_label_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return label_space_from_json(buf.str());
}

void save_label_space(const LabelSpace& space, const std::filesystem::path& path) {
  validate_label_space(space);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << label_space_to_json(space);
}

}  // namespace corpusforge::labelspace
