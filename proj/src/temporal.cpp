#include "corpusforge/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/sampling.hpp"

namespace corpusforge::temporal {

namespace {

constexpr double kEps = 1e-9;

std::vector<std::size_t> label_order(const std::vector<std::size_t>& members, std::uint64_t seed,
                                     const std::string& tag, const std::string& label) {
  std::vector<std::size_t> out = members;
  Rng rng(derive_seed(seed, tag + ":" + label));
  rng.shuffle(out);
  return out;
}

std::string plan_string(const BudgetPlan& plan) {
  std::string s = "class=" + to_string(plan.length_class);
  if (plan.mode == BudgetMode::FixedCount) {
    s += " mode=f1 count=" + std::to_string(plan.count);
  } else {
    s += " mode=f2 minutes=" + format_fixed6(plan.total_minutes);
  }
  return s;
}

}  // namespace

std::string to_string(LengthClass c) {
  switch (c) {
    case LengthClass::Short: return "short";
    case LengthClass::Long: return "long";
    case LengthClass::LongCenter: return "long-center";
  }
  return "short";
}

LengthClass parse_length_class(const std::string& s) {
  if (s == "short") return LengthClass::Short;
  if (s == "long") return LengthClass::Long;
  if (s == "long-center") return LengthClass::LongCenter;
  throw ParseError("unknown length class '" + s + "'");
}

ClipSpec jitter_clip(double duration_s, double clip_len_s, std::optional<Window> window, std::uint64_t seed) {
  if (!(clip_len_s > 0.0)) throw ValidationError("jitter_clip: clip length must be > 0");
  if (clip_len_s > duration_s) throw ValidationError("jitter_clip: clip longer than video");
  const Window w = window.value_or(Window{0.0, duration_s});
  if (w.lo_s < 0.0 || w.hi_s > duration_s || w.hi_s - w.lo_s < clip_len_s) {
    throw ValidationError("jitter_clip: infeasible window [" + format_fixed6(w.lo_s) + ", " +
                          format_fixed6(w.hi_s) + "] for a " + format_fixed6(clip_len_s) + " s clip");
  }
  Rng rng(derive_seed(seed, "jitter"));
  const double span = w.hi_s - clip_len_s - w.lo_s;
  double start = w.lo_s + rng.uniform01() * span;
  while (start + clip_len_s > w.hi_s) start = std::nextafter(start, -std::numeric_limits<double>::infinity());
  return {std::max(start, w.lo_s), clip_len_s};
}

Window center_window(double duration_s, double width_s) {
  if (width_s > duration_s) throw ValidationError("center window wider than the video");
  const double mid = duration_s / 2.0;
  return {mid - width_s / 2.0, mid + width_s / 2.0};
}

bool in_length_class(const VideoRecord& v, LengthClass c) {
  if (c == LengthClass::Short) return v.duration_s >= kShortMin && v.duration_s <= kShortMax;
  return v.duration_s >= kLongMin && v.duration_s <= kLongMax;
}

Corpus build_length_class(const Corpus& corpus, LengthClass c) {
  if (corpus.empty()) throw ValidationError("build_length_class: empty corpus");
  Corpus out;
  std::size_t short_n = 0, long_n = 0;
  for (const auto& v : corpus) {
    short_n += in_length_class(v, LengthClass::Short);
    long_n += in_length_class(v, LengthClass::Long);
    if (in_length_class(v, c)) out.push_back(v);
  }
  if (out.empty()) {
    throw ValidationError("no videos in class " + to_string(c) + " (short: " + std::to_string(short_n) +
                          ", long: " + std::to_string(long_n) +
                          ", other: " + std::to_string(corpus.size() - short_n - long_n) + ")");
  }
  return out;
}

ClipSpec class_clip(const VideoRecord& v, LengthClass c) {
  if (c == LengthClass::LongCenter) {
    const Window w = center_window(v.duration_s);
    return {w.lo_s, w.hi_s - w.lo_s};
  }
  return {0.0, v.duration_s};
}

DatasetManifest plan_budget(const Corpus& subset, const BudgetPlan& plan, const LabelSpace& space,
                            std::uint64_t seed) {
  for (const auto& v : subset) {
    if (!in_length_class(v, plan.length_class)) {
      throw ValidationError("video '" + v.id + "' is not in class " + to_string(plan.length_class));
    }
  }
  const auto pools = sampling::assign_pools(subset, space, seed);
  const std::size_t available = pools.size();

  DatasetManifest m;
  m.seed = seed;
  m.provenance["labelspace"] = space.name;
  m.provenance["select"] = plan_string(plan);
  double achieved_s = 0.0;
  auto emit = [&](std::size_t idx, const std::string& label) {
    const auto clip = class_clip(subset[idx], plan.length_class);
    m.add_row(subset[idx].id, label, clip.start_s, clip.len_s);
    achieved_s += clip.len_s;
  };

  if (plan.mode == BudgetMode::FixedCount) {
    if (plan.count < 1) throw ValidationError("F1 budget must be >= 1 video");
    if (plan.count > available) {
      throw ValidationError("insufficient corpus: F1 budget " + std::to_string(plan.count) + " > " +
                            std::to_string(available) + " labeled videos");
    }
    // Largest-remainder apportionment of `count` over pool sizes.
    std::map<std::string, std::uint64_t> quota;
    std::vector<std::pair<double, std::string>> rest;
    std::uint64_t assigned = 0;
    for (const auto& [label, members] : pools.members) {
      if (members.empty()) continue;
      const double exact = static_cast<double>(plan.count) * members.size() / available;
      const auto whole = static_cast<std::uint64_t>(std::floor(exact));
      quota[label] = whole;
      assigned += whole;
      rest.emplace_back(exact - whole, label);
    }
    std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < plan.count; ++i, ++assigned) ++quota[rest[i].second];
    for (const auto& [label, q] : quota) {
      const auto order = label_order(pools.members.at(label), seed, "f1", label);
      for (std::uint64_t i = 0; i < q; ++i) emit(order[i], label);
    }
  } else {
    if (!(plan.total_minutes > 0.0)) throw ValidationError("F2 budget must be > 0 minutes");
    const double budget_s = plan.total_minutes * 60.0;
    double supply_s = 0.0;
    for (const auto& [label, members] : pools.members) {
      for (auto i : members) supply_s += class_clip(subset[i], plan.length_class).len_s;
    }
    if (supply_s + kEps < budget_s) {
      throw ValidationError("insufficient corpus: " + format_fixed6(supply_s / 60.0) + " minutes available, " +
                            format_fixed6(plan.total_minutes) + " requested");
    }
    struct Queue {
      const std::string* label;
      std::vector<std::size_t> order;
      std::size_t next = 0;
    };
    std::vector<Queue> queues;
    for (const auto& [label, members] : pools.members) {
      if (!members.empty()) queues.push_back({&label, label_order(members, seed, "f2", label)});
    }
    std::stable_sort(queues.begin(), queues.end(),
                     [](const Queue& a, const Queue& b) { return a.order.size() < b.order.size(); });
    bool full = false;
    while (!full) {
      bool progressed = false;
      for (auto& q : queues) {
        if (q.next == q.order.size()) continue;
        const std::size_t idx = q.order[q.next];
        const double len = class_clip(subset[idx], plan.length_class).len_s;
        if (achieved_s + len > budget_s + kEps) {
          full = true;
          break;
        }
        ++q.next;
        emit(idx, *q.label);
        progressed = true;
      }
      if (!progressed) break;
    }
  }
  m.provenance["achieved_minutes"] = format_fixed6(achieved_s / 60.0);
  return m;
}

}  // namespace corpusforge::temporal
