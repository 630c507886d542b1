#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/manifest.hpp"

namespace corpusforge::labelspace {

enum class PosHint { Verb, Noun, Other, Stopword };

struct WordForm {
  std::string surface;
  std::string stem;
  PosHint pos = PosHint::Other;

  bool operator==(const WordForm&) const = default;
};

struct SeedLabel {
  std::string text;  // label name as it appears in the label space
  std::vector<WordForm> words;
};

/// The fixed function-word list: a an the of on in to with.
bool is_stopword(std::string_view word);

/// Minimal suffix stripper. Rules, applied to a lowercase word:
///   -ing  strip when the remainder has a vowel and len > 4; undouble a
///         trailing double consonant other than l/s/z (swimming -> swim)
///   -ed   same guard; undouble, else restore a final e after at/bl/iz or
///         a short consonant-vowel-consonant stem (baked -> bake)
///   -s    strip a single trailing s (not ss) when len > 3
std::string stem(std::string_view word);

/// Lowercases, strips non-letters and computes the stem. Stopwords override
/// the hint. Throws ValidationError when nothing is left.
WordForm canonicalize(std::string_view word, PosHint hint);

/// {surface, stem} plus the plural of the stem for nouns, or the -ing form
/// of the stem (with e-dropping and consonant doubling) for verbs.
std::set<std::string> word_variants(const WordForm& w);

/// Builds a seed label from whitespace-separated words; a word may carry a
/// "/v", "/n", "|verb" or "|noun" suffix, otherwise `default_hint` applies.
SeedLabel parse_seed(std::string_view line, PosHint default_hint = PosHint::Other);

struct HashtagOptions {
  /// Every permutation of the content words instead of the original and
  /// reversed orders only.
  bool all_orders = false;
};

/// Hashtags generated from a seed label: the full surface phrase (with
/// stopwords) plus every stopword-free concatenation of one variant per
/// content word, in original and reversed word order.
std::set<std::string> relevant_hashtags(const SeedLabel& label, const HashtagOptions& opts = {});

/// Builds a label space and keeps only labels matched by >= min_count
/// corpus videos. For VerbNoun the candidates are the cross product of the
/// verb seeds and the noun seeds.
LabelSpace build_label_space(const std::vector<SeedLabel>& seeds, LabelKind kind,
                             const Corpus& corpus, int min_count,
                             const HashtagOptions& opts = {}, std::string name = {});

/// Reads a seed list (one phrase per line, '#' starts a comment line).
std::vector<SeedLabel> load_seeds(const std::filesystem::path& path, LabelKind kind);

std::string label_space_to_json(const LabelSpace& space);
LabelSpace label_space_from_json(std::string_view text);
LabelSpace load_label_space(const std::filesystem::path& path);
void save_label_space(const LabelSpace& space, const std::filesystem::path& path);

/// Throws ValidationError if any entry breaks the label-space invariants.
void validate_label_space(const LabelSpace& space);

}  // namespace corpusforge::labelspace
