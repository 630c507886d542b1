#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corpusforge/manifest.hpp"

namespace corpusforge::sampling {

enum class Strategy { Random, SquareRoot, TailPreserving };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct SamplingPlan {
  Strategy strategy = Strategy::Random;
  std::uint64_t budget = 1;  // number of videos
  std::uint64_t seed = 0;
};

/// p[l] = sqrt(n_l) / sum_j sqrt(n_j). Throws on an all-zero histogram.
std::map<std::string, double> sqrt_weights(const LabelHistogram& h);

/// Disjoint per-label video pools. Every corpus video that matches at least
/// one label lands in exactly one pool; multi-label videos are assigned by a
/// seeded uniform choice keyed on the video id.
struct LabelPools {
  std::map<std::string, std::vector<std::size_t>> members;  // corpus indices, ascending

  std::size_t size() const;
  LabelHistogram histogram() const;
};

LabelPools assign_pools(const Corpus& corpus, const LabelSpace& space, std::uint64_t seed);

/// Water-filling quota: labels ascending by count keep everything while
/// they fit under an equal share of what is left; the remaining head labels
/// split the rest equally, the first `rest mod heads` (by label) get one more.
std::map<std::string, std::uint64_t> tail_preserving_quota(
    const std::map<std::string, std::uint64_t>& counts, std::uint64_t budget);

DatasetManifest sample_random(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan);
DatasetManifest sample_square_root(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan);
DatasetManifest sample_tail_preserving(const Corpus& corpus, const LabelSpace& space,
                                       const SamplingPlan& plan);

/// Dispatches on plan.strategy.
DatasetManifest sample(const Corpus& corpus, const LabelSpace& space, const SamplingPlan& plan);

/// Uniform k-subset of the labels. Subsets for the same seed are nested:
/// one seeded permutation of the labels, of which the first k are kept.
LabelSpace subset_labels(const LabelSpace& space, std::size_t k, std::uint64_t seed);

}  // namespace corpusforge::sampling
