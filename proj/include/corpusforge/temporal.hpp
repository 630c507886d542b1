#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "corpusforge/manifest.hpp"

namespace corpusforge::temporal {

struct ClipSpec {
  double start_s = 0.0;
  double len_s = 0.0;
};

struct Window {
  double lo_s = 0.0;
  double hi_s = 0.0;
};

enum class LengthClass { Short, Long, LongCenter };
enum class BudgetMode { FixedCount, FixedDuration };

std::string to_string(LengthClass c);
LengthClass parse_length_class(const std::string& s);

inline constexpr double kShortMin = 1.0, kShortMax = 5.0;
inline constexpr double kLongMin = 55.0, kLongMax = 60.0;
inline constexpr double kCenterWindow = 4.0;

struct BudgetPlan {
  BudgetMode mode = BudgetMode::FixedCount;
  std::uint64_t count = 0;     // FixedCount: number of videos
  double total_minutes = 0.0;  // FixedDuration: clip minutes
  LengthClass length_class = LengthClass::Short;
};

/// Clip start drawn uniformly from [lo, hi - clip_len] (the whole video when
/// no window is given). Deterministic in `seed`.
ClipSpec jitter_clip(double duration_s, double clip_len_s, std::optional<Window> window, std::uint64_t seed);

/// [d/2 - 2, d/2 + 2] for a video of duration d.
Window center_window(double duration_s, double width_s = kCenterWindow);

bool in_length_class(const VideoRecord& v, LengthClass c);

/// Videos of the class, in corpus order. Throws with per-class counts when
/// nothing qualifies.
Corpus build_length_class(const Corpus& corpus, LengthClass c);

/// The clip a class assigns to a video: the whole video for Short/Long, the
/// centre window for LongCenter.
ClipSpec class_clip(const VideoRecord& v, LengthClass c);

/// FixedCount: exactly `count` videos, per-label quotas proportional to the
/// subset (largest remainder). FixedDuration: round-robin over labels in
/// ascending-count order, adding clips until the next would exceed the
/// budget. The achieved minutes are recorded in the provenance.
DatasetManifest plan_budget(const Corpus& subset, const BudgetPlan& plan, const LabelSpace& space,
                            std::uint64_t seed);

}  // namespace corpusforge::temporal
