#include "corpusforge/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"

namespace corpusforge::sampling {

namespace {

struct Pick {
  std::size_t video;
  const std::string* label;
};

std::vector<std::size_t> permuted(const std::vector<std::size_t>& members, std::uint64_t seed,
                                  const std::string& label) {
  std::vector<std::size_t> out = members;
  Rng rng(derive_seed(seed, "pool:" + label));
  rng.shuffle(out);
  return out;
}

DatasetManifest to_manifest(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan,
                            const std::vector<Pick>& picks) {
  DatasetManifest m;
  m.seed = plan.seed;
  m.provenance["labelspace"] = space.name;
  m.provenance["sample"] = "strategy=" + to_string(plan.strategy) +
                           " budget=" + std::to_string(plan.budget) +
                           " seed=" + std::to_string(plan.seed);
  m.rows.reserve(picks.size());
  for (const auto& p : picks) {
    const auto& v = corpus[p.video];
    m.add_row(v.id, *p.label, 0.0, v.duration_s);
  }
  return m;
}

void check_budget(const SamplingPlan& plan, const LabelPools& pools) {
  if (plan.budget < 1) throw ValidationError("budget must be >= 1");
  if (plan.budget > pools.size()) {
    throw ValidationError("budget " + std::to_string(plan.budget) + " exceeds the " +
                          std::to_string(pools.size()) + " labeled videos in the corpus");
  }
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::SquareRoot: return "sqrt";
    case Strategy::TailPreserving: return "tail";
  }
  return "random";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "random") return Strategy::Random;
  if (s == "sqrt") return Strategy::SquareRoot;
  if (s == "tail") return Strategy::TailPreserving;
  throw ParseError("unknown sampling strategy '" + s + "'");
}

std::map<std::string, double> sqrt_weights(const LabelHistogram& h) {
  double z = 0.0;
  for (const auto& [_, n] : h.counts) z += std::sqrt(static_cast<double>(n));
  if (z == 0.0) throw ValidationError("sqrt_weights: histogram has no positive count");
  std::map<std::string, double> p;
  for (const auto& [label, n] : h.counts) p[label] = std::sqrt(static_cast<double>(n)) / z;
  return p;
}

std::size_t LabelPools::size() const {
  std::size_t n = 0;
  for (const auto& [_, m] : members) n += m.size();
  return n;
}

LabelHistogram LabelPools::histogram() const {
  LabelHistogram h;
  for (const auto& [label, m] : members) h.counts[label] = m.size();
  return h;
}

LabelPools assign_pools(const Corpus& corpus, const LabelSpace& space, std::uint64_t seed) {
  LabelPools pools;
  for (const auto& [label, _] : space.entries) pools.members[label];
  const HashtagIndex index(space);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto matched = index.matched_labels(corpus[i]);
    if (matched.empty()) continue;
    const auto& label = matched[keyed_choice(corpus[i].id, seed, matched.size())];
    pools.members[label].push_back(i);
  }
  return pools;
}

std::map<std::string, std::uint64_t> tail_preserving_quota(
    const std::map<std::string, std::uint64_t>& counts, std::uint64_t budget) {
  std::vector<std::pair<std::string, std::uint64_t>> order;
  std::uint64_t total = 0;
  for (const auto& [label, n] : counts) {
    if (n == 0) continue;
    order.emplace_back(label, n);
    total += n;
  }
  if (budget > total) throw ValidationError("budget exceeds corpus size");
  if (budget < order.size()) {
    throw ValidationError("budget " + std::to_string(budget) + " is smaller than the number of labels (" +
                          std::to_string(order.size()) + ")");
  }
  // Ascending by count; std::map order already sorts equal counts by label.
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  std::map<std::string, std::uint64_t> quota;
  std::uint64_t remaining = budget;
  std::size_t i = 0;
  for (; i < order.size(); ++i) {
    const std::uint64_t left = order.size() - i;
    if (order[i].second * left > remaining) break;
    quota[order[i].first] = order[i].second;
    remaining -= order[i].second;
  }
  if (i < order.size()) {
    std::vector<std::string> heads;
    for (std::size_t j = i; j < order.size(); ++j) heads.push_back(order[j].first);
    std::sort(heads.begin(), heads.end());
    const std::uint64_t share = remaining / heads.size();
    const std::uint64_t extra = remaining % heads.size();
    for (std::size_t j = 0; j < heads.size(); ++j) quota[heads[j]] = share + (j < extra ? 1 : 0);
  }
  return quota;
}

DatasetManifest sample_random(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan) {
  const auto pools = assign_pools(corpus, space, plan.seed);
  check_budget(plan, pools);
  std::vector<Pick> all;
  for (const auto& [label, members] : pools.members) {
    for (auto v : members) all.push_back({v, &label});
  }
  std::sort(all.begin(), all.end(), [](const Pick& a, const Pick& b) { return a.video < b.video; });
  Rng rng(derive_seed(plan.seed, "random"));
  rng.shuffle(all);
  all.resize(plan.budget);
  return to_manifest(corpus, space, plan, all);
}

DatasetManifest sample_square_root(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan) {
  const auto pools = assign_pools(corpus, space, plan.seed);
  check_budget(plan, pools);

  struct Arm {
    const std::string* label;
    std::vector<std::size_t> queue;
    std::size_t next = 0;
    double weight;
  };
  std::vector<Arm> arms;
  for (const auto& [label, members] : pools.members) {
    if (members.empty()) continue;
    arms.push_back({&label, permuted(members, plan.seed, label), 0,
                    std::sqrt(static_cast<double>(members.size()))});
  }

  std::vector<double> cumulative;
  auto rebuild = [&] {
    cumulative.resize(arms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < arms.size(); ++i) cumulative[i] = acc += arms[i].weight;
  };
  rebuild();

  Rng rng(derive_seed(plan.seed, "sqrt-draws"));
  std::vector<Pick> picks;
  picks.reserve(plan.budget);
  while (picks.size() < plan.budget) {
    const double u = rng.uniform01() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t a = std::min<std::size_t>(it - cumulative.begin(), arms.size() - 1);
    auto& arm = arms[a];
    picks.push_back({arm.queue[arm.next++], arm.label});
    if (arm.next == arm.queue.size()) {
      arms.erase(arms.begin() + static_cast<std::ptrdiff_t>(a));
      if (!arms.empty()) rebuild();
    }
  }
  return to_manifest(corpus, space, plan, picks);
}

DatasetManifest sample_tail_preserving(const Corpus& corpus, const LabelSpace& space,
                                       const SamplingPlan& plan) {
  const auto pools = assign_pools(corpus, space, plan.seed);
  check_budget(plan, pools);
  const auto quota = tail_preserving_quota(pools.histogram().counts, plan.budget);
  std::vector<Pick> picks;
  for (const auto& [label, members] : pools.members) {
    auto q = quota.find(label);
    if (q == quota.end()) continue;
    const auto order = permuted(members, plan.seed, label);
    for (std::uint64_t i = 0; i < q->second; ++i) picks.push_back({order[i], &label});
  }
  return to_manifest(corpus, space, plan, picks);
}

DatasetManifest sample(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan) {
  switch (plan.strategy) {
    case Strategy::Random: return sample_random(corpus, space, plan);
    case Strategy::SquareRoot: return sample_square_root(corpus, space, plan);
    case Strategy::TailPreserving: return sample_tail_preserving(corpus, space, plan);
  }
  throw ValidationError("unknown strategy");
}

LabelSpace subset_labels(const LabelSpace& space, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > space.entries.size()) {
    throw ValidationError("subset size " + std::to_string(k) + " out of range [1, " +
                          std::to_string(space.entries.size()) + "]");
  }
  std::vector<std::string> labels;
  for (const auto& [label, _] : space.entries) labels.push_back(label);
  Rng rng(derive_seed(seed, "subset-labels"));
  rng.shuffle(labels);
  LabelSpace out = space;
  out.entries.clear();
  for (std::size_t i = 0; i < k; ++i) out.entries[labels[i]] = space.entries.at(labels[i]);
  if (k != space.entries.size()) out.name = space.name + "-" + std::to_string(k);
  return out;
}

}  // namespace corpusforge::sampling
