#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corpusforge/manifest.hpp"

namespace corpusforge::eval {

/// Uniform choice among the labels the video matches, fixed per
/// (video id, seed). Throws when nothing matches.
std::string assign_single_label(const VideoRecord& v, const LabelSpace& space, std::uint64_t seed);

struct LrSchedule {
  double base_lr = 0.192;
  std::size_t warmup_iters = 0;
  std::size_t total_iters = 0;
  std::size_t num_reductions = 13;
  double factor = 0.5;
  std::vector<double> values;            // one per iteration
  std::vector<std::size_t> plateau_len;  // num_reductions + 1 entries
};

/// Linear warmup from base/warmup to base, then num_reductions + 1 plateaus
/// of (near) equal length at base * factor^i. Earlier plateaus take the
/// remainder iterations.
LrSchedule lr_schedule(double base, std::size_t warmup, std::size_t total, std::size_t reductions = 13,
                       double factor = 0.5);

enum class ClipSpacing { EndpointInclusive, SegmentCenter };

/// Start frames of n evenly spread clips. EndpointInclusive puts the first
/// clip at 0 and the last flush with the end; SegmentCenter centres one clip
/// in each of n equal segments.
std::vector<std::size_t> uniform_clip_starts(std::size_t num_frames, std::size_t clip_len, std::size_t n_clips = 10,
                                             ClipSpacing spacing = ClipSpacing::EndpointInclusive);

/// Element-wise mean of the clip score vectors.
std::vector<double> video_prediction(const std::vector<std::vector<double>>& clip_scores);

using Matrix = std::vector<std::vector<double>>;

enum class ProbeMode { SoftmaxMulticlass, SigmoidMultilabel };

/// Multiclass targets use `classes`; multilabel targets use `multilabel`
/// (n x L, entries 0/1).
struct ProbeTargets {
  std::vector<std::uint32_t> classes;
  std::vector<std::vector<std::uint8_t>> multilabel;
};

struct ProbeModel {
  Matrix weights;  // classes x d
  std::vector<double> bias;
  double l2_lambda = 1e-4;
  ProbeMode mode = ProbeMode::SoftmaxMulticlass;
  double final_loss = 0.0;
  std::vector<double> loss_history;

  /// Raw scores (logits) for one feature row.
  std::vector<double> scores(const std::vector<double>& x) const;
  /// Softmax (multiclass) or per-label sigmoid (multilabel) of the scores.
  std::vector<double> probabilities(const std::vector<double>& x) const;
};

struct ProbeGradient {
  double loss = 0.0;
  Matrix d_weights;
  std::vector<double> d_bias;
};

/// Mean cross-entropy (softmax) or mean summed per-label logistic loss
/// (sigmoid) plus lambda/2 * ||W||^2; the bias is not regularized.
ProbeGradient probe_loss_and_gradient(const ProbeModel& model, const Matrix& features, const ProbeTargets& targets);

struct ProbeOptions {
  ProbeMode mode = ProbeMode::SoftmaxMulticlass;
  double l2_lambda = 1e-4;
  std::size_t iters = 1000;
  double step = 0.1;
  std::size_t classes = 0;  // 0: inferred from targets
};

/// Full-batch gradient descent from zero initialisation.
ProbeModel train_probe(const Matrix& features, const ProbeTargets& targets, const ProbeOptions& opts);

/// Fraction of rows whose true class ranks within the top k (ties go to the
/// lower class index).
double accuracy_topk(const Matrix& scores, const std::vector<std::uint32_t>& labels, std::size_t k);

struct MapResult {
  double map = 0.0;
  std::vector<double> per_label_ap;  // NaN for skipped labels
  std::vector<std::size_t> skipped;  // labels without positives
};

/// Non-interpolated AP per label (descending score, ties by row index),
/// averaged over labels that have a positive.
MapResult mean_average_precision(const Matrix& scores, const std::vector<std::vector<std::uint8_t>>& truth);

/// Feature file: "CFFT", u32 n, u32 d, n*d f32 row-major, then either n u32
/// class ids (multiclass) or an n x L u8 matrix (multilabel; L follows from
/// the remaining byte count). Little-endian.
struct FeatureSet {
  Matrix features;
  ProbeTargets targets;
};
FeatureSet load_features(const std::filesystem::path& path, ProbeMode mode);
void save_features(const FeatureSet& set, ProbeMode mode, const std::filesystem::path& path);

std::string probe_to_json(const ProbeModel& model);
ProbeModel probe_from_json(const std::string& text);

std::string schedule_to_json(const LrSchedule& s);

}  // namespace corpusforge::eval
