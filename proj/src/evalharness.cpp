#include "corpusforge/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "corpusforge/binary_io.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "json.hpp"

namespace corpusforge::eval {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::size_t target_width(const ProbeMode mode, const ProbeTargets& t, std::size_t n) {
  if (mode == ProbeMode::SoftmaxMulticlass) {
    if (t.classes.size() != n) throw ValidationError("probe: need one class id per feature row");
    return t.classes.empty() ? 0 : *std::max_element(t.classes.begin(), t.classes.end()) + 1;
  }
  if (t.multilabel.size() != n) throw ValidationError("probe: need one label row per feature row");
  const std::size_t L = t.multilabel.empty() ? 0 : t.multilabel[0].size();
  for (const auto& row : t.multilabel) {
    if (row.size() != L) throw ValidationError("probe: ragged multilabel matrix");
  }
  return L;
}

std::size_t feature_dim(const Matrix& features) {
  if (features.empty()) throw ValidationError("probe: no feature rows");
  const std::size_t d = features[0].size();
  for (const auto& row : features) {
    if (row.size() != d) throw ValidationError("probe: ragged feature matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw ValidationError("probe: non-finite feature value");
    }
  }
  return d;
}

}  // namespace

std::string assign_single_label(const VideoRecord& v, const LabelSpace& space, std::uint64_t seed) {
  const auto matched = HashtagIndex(space).matched_labels(v);
  if (matched.empty()) throw ValidationError("video '" + v.id + "' matches no label");
  return matched[keyed_choice(v.id, seed, matched.size())];
}

LrSchedule lr_schedule(double base, std::size_t warmup, std::size_t total, std::size_t reductions, double factor) {
  if (!(base > 0.0)) throw ValidationError("lr_schedule: base lr must be > 0");
  if (!(factor > 0.0 && factor <= 1.0)) throw ValidationError("lr_schedule: factor must be in (0, 1]");
  if (total <= warmup) throw ValidationError("lr_schedule: total iterations must exceed warmup");
  const std::size_t steady = total - warmup;
  const std::size_t plateaus = reductions + 1;
  if (steady < plateaus) {
    throw ValidationError("lr_schedule: " + std::to_string(steady) + " post-warmup iterations cannot hold " +
                          std::to_string(plateaus) + " plateaus");
  }
  LrSchedule s{base, warmup, total, reductions, factor, {}, {}};
  s.values.reserve(total);
  for (std::size_t i = 0; i < warmup; ++i) {
    s.values.push_back(base * static_cast<double>(i + 1) / static_cast<double>(warmup));
  }
  const std::size_t len = steady / plateaus;
  const std::size_t extra = steady % plateaus;
  for (std::size_t p = 0; p < plateaus; ++p) {
    const std::size_t n = len + (p < extra ? 1 : 0);
    s.plateau_len.push_back(n);
    const double lr = base * std::pow(factor, static_cast<double>(p));
    s.values.insert(s.values.end(), n, lr);
  }
  return s;
}

std::vector<std::size_t> uniform_clip_starts(std::size_t num_frames, std::size_t clip_len, std::size_t n_clips,
                                             ClipSpacing spacing) {
  if (clip_len < 1) throw ValidationError("clip length must be >= 1");
  if (n_clips < 1) throw ValidationError("need at least one clip");
  if (clip_len > num_frames) {
    throw ValidationError("clip of " + std::to_string(clip_len) + " frames longer than video of " +
                          std::to_string(num_frames));
  }
  const std::size_t span = num_frames - clip_len;
  std::vector<std::size_t> starts(n_clips);
  if (spacing == ClipSpacing::SegmentCenter) {
    for (std::size_t i = 0; i < n_clips; ++i) {
      const double center = (static_cast<double>(i) + 0.5) * static_cast<double>(num_frames) / n_clips;
      const double start = std::round(center - static_cast<double>(clip_len) / 2.0);
      starts[i] = static_cast<std::size_t>(std::clamp(start, 0.0, static_cast<double>(span)));
    }
    return starts;
  }
  if (n_clips == 1) {
    starts[0] = span / 2;
    return starts;
  }
  const std::size_t den = n_clips - 1;
  // round(i * span / den), halves rounded up, in exact integer arithmetic.
  for (std::size_t i = 0; i < n_clips; ++i) starts[i] = (2 * i * span + den) / (2 * den);
  return starts;
}

std::vector<double> video_prediction(const std::vector<std::vector<double>>& clip_scores) {
  if (clip_scores.empty()) throw ValidationError("video_prediction: no clips");
  const std::size_t c = clip_scores[0].size();
  std::vector<double> mean(c, 0.0);
  for (const auto& clip : clip_scores) {
    if (clip.size() != c) throw ValidationError("video_prediction: clips have different lengths");
    for (std::size_t i = 0; i < c; ++i) mean[i] += clip[i];
  }
  for (auto& v : mean) v /= static_cast<double>(clip_scores.size());
  return mean;
}

std::vector<double> ProbeModel::scores(const std::vector<double>& x) const {
  std::vector<double> z(bias);
  for (std::size_t c = 0; c < weights.size(); ++c) {
    z[c] += std::inner_product(weights[c].begin(), weights[c].end(), x.begin(), 0.0);
  }
  return z;
}

std::vector<double> ProbeModel::probabilities(const std::vector<double>& x) const {
  auto z = scores(x);
  if (mode == ProbeMode::SigmoidMultilabel) {
    for (auto& v : z) v = sigmoid(v);
    return z;
  }
  if (z.empty()) return z;
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (auto& v : z) total += v = std::exp(v - top);
  for (auto& v : z) v /= total;
  return z;
}

ProbeGradient probe_loss_and_gradient(const ProbeModel& model, const Matrix& features, const ProbeTargets& targets) {
  const std::size_t n = features.size();
  const std::size_t C = model.weights.size();
  const std::size_t d = C ? model.weights[0].size() : 0;
  ProbeGradient g{0.0, Matrix(C, std::vector<double>(d, 0.0)), std::vector<double>(C, 0.0)};
  std::vector<double> residual(C);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = features[i];
    const auto z = model.scores(x);
    if (model.mode == ProbeMode::SoftmaxMulticlass) {
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - mx);
      const double log_z = mx + std::log(sum);
      const std::uint32_t y = targets.classes[i];
      g.loss += log_z - z[y];
      for (std::size_t c = 0; c < C; ++c) residual[c] = std::exp(z[c] - log_z) - (c == y ? 1.0 : 0.0);
    } else {
      for (std::size_t c = 0; c < C; ++c) {
        const double y = targets.multilabel[i][c];
        g.loss += softplus(z[c]) - y * z[c];
        residual[c] = sigmoid(z[c]) - y;
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      g.d_bias[c] += residual[c];
      for (std::size_t j = 0; j < d; ++j) g.d_weights[c][j] += residual[c] * x[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double sq = 0.0;
  g.loss *= inv_n;
  for (std::size_t c = 0; c < C; ++c) {
    g.d_bias[c] *= inv_n;
    for (std::size_t j = 0; j < d; ++j) {
      sq += model.weights[c][j] * model.weights[c][j];
      g.d_weights[c][j] = g.d_weights[c][j] * inv_n + model.l2_lambda * model.weights[c][j];
    }
  }
  g.loss += 0.5 * model.l2_lambda * sq;
  return g;
}

ProbeModel train_probe(const Matrix& features, const ProbeTargets& targets, const ProbeOptions& opts) {
  const std::size_t d = feature_dim(features);
  const std::size_t n = features.size();
  std::size_t classes = target_width(opts.mode, targets, n);
  if (opts.classes) {
    if (opts.mode == ProbeMode::SoftmaxMulticlass && opts.classes < classes) {
      throw ValidationError("probe: class id exceeds the configured class count");
    }
    classes = opts.classes;
  }
  if (classes < 1) throw ValidationError("probe: no classes");
  if (n < classes) throw ValidationError("probe: need at least as many rows as classes");
  if (!(opts.l2_lambda >= 0.0) || !(opts.step > 0.0)) throw ValidationError("probe: bad lambda or step");

  ProbeModel model;
  model.mode = opts.mode;
  model.l2_lambda = opts.l2_lambda;
  model.weights.assign(classes, std::vector<double>(d, 0.0));
  model.bias.assign(classes, 0.0);
  for (std::size_t it = 0; it < opts.iters; ++it) {
    const auto g = probe_loss_and_gradient(model, features, targets);
    if (!std::isfinite(g.loss)) throw Error("probe: loss became non-finite at iteration " + std::to_string(it));
    model.loss_history.push_back(g.loss);
    for (std::size_t c = 0; c < classes; ++c) {
      model.bias[c] -= opts.step * g.d_bias[c];
      for (std::size_t j = 0; j < d; ++j) model.weights[c][j] -= opts.step * g.d_weights[c][j];
    }
  }
  const auto final = probe_loss_and_gradient(model, features, targets);
  if (!std::isfinite(final.loss)) throw Error("probe: loss became non-finite at iteration " + std::to_string(opts.iters));
  model.final_loss = final.loss;
  return model;
}

double accuracy_topk(const Matrix& scores, const std::vector<std::uint32_t>& labels, std::size_t k) {
  if (scores.size() != labels.size()) throw ValidationError("accuracy_topk: predictions and labels differ in length");
  if (scores.empty()) throw ValidationError("accuracy_topk: no predictions");
  const std::size_t C = scores[0].size();
  if (k < 1 || k > C) throw ValidationError("accuracy_topk: k must be in [1, classes]");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != C) throw ValidationError("accuracy_topk: ragged scores");
    const std::uint32_t y = labels[i];
    if (y >= C) throw ValidationError("accuracy_topk: label out of range");
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < C; ++c) {
      if (scores[i][c] > scores[i][y] || (scores[i][c] == scores[i][y] && c < y)) ++ahead;
    }
    hits += ahead < k;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

MapResult mean_average_precision(const Matrix& scores, const std::vector<std::vector<std::uint8_t>>& truth) {
  if (truth.empty() || scores.size() != truth.size()) throw ValidationError("mAP: empty or misaligned truth");
  const std::size_t n = truth.size();
  const std::size_t L = truth[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i].size() != L || scores[i].size() != L) throw ValidationError("mAP: ragged input");
  }
  MapResult r;
  r.per_label_ap.assign(L, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> order(n);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < L; ++l) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a][l] > scores[b][l]; });
    std::size_t positives = 0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < n; ++rank) {
      if (truth[order[rank]][l]) {
        ++positives;
        ap += static_cast<double>(positives) / static_cast<double>(rank + 1);
      }
    }
    if (positives == 0) {
      r.skipped.push_back(l);
      continue;
    }
    r.per_label_ap[l] = ap / static_cast<double>(positives);
    sum += r.per_label_ap[l];
    ++used;
  }
  if (used == 0) throw ValidationError("mAP: no label has a positive example");
  r.map = sum / static_cast<double>(used);
  return r;
}

FeatureSet load_features(const std::filesystem::path& path, ProbeMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  binio::expect_magic(in, "CFFT");
  const auto n = binio::get<std::uint32_t>(in, "n");
  const auto d = binio::get<std::uint32_t>(in, "d");
  if (n == 0 || d == 0) throw ParseError("CFFT: empty feature matrix");
  FeatureSet set;
  set.features.assign(n, std::vector<double>(d));
  for (auto& row : set.features) {
    for (auto& v : row) v = binio::get<float>(in, "features");
  }
  if (mode == ProbeMode::SoftmaxMulticlass) {
    set.targets.classes.resize(n);
    for (auto& y : set.targets.classes) y = binio::get<std::uint32_t>(in, "labels");
    if (in.peek() != std::char_traits<char>::eof()) throw ParseError("CFFT: trailing bytes after class labels");
    return set;
  }
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto rest = static_cast<std::size_t>(in.tellg() - here);
  in.seekg(here);
  if (rest == 0 || rest % n != 0) throw ParseError("CFFT: label matrix size is not a multiple of n");
  const std::size_t L = rest / n;
  set.targets.multilabel.assign(n, std::vector<std::uint8_t>(L));
  for (auto& row : set.targets.multilabel) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(L))) {
      throw ParseError("CFFT: truncated label matrix");
    }
    for (auto& v : row) {
      if (v > 1) throw ParseError("CFFT: multilabel entries must be 0 or 1");
    }
  }
  return set;
}

void save_features(const FeatureSet& set, ProbeMode mode, const std::filesystem::path& path) {
  const std::size_t d = feature_dim(set.features);
  const std::size_t n = set.features.size();
  target_width(mode, set.targets, n);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write("CFFT", 4);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (const auto& row : set.features) {
    for (double v : row) binio::put<float>(out, static_cast<float>(v));
  }
  if (mode == ProbeMode::SoftmaxMulticlass) {
    for (auto y : set.targets.classes) binio::put<std::uint32_t>(out, y);
  } else {
    for (const auto& row : set.targets.multilabel) {
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string probe_to_json(const ProbeModel& model) {
  nlohmann::json j;
  j["mode"] = model.mode == ProbeMode::SoftmaxMulticlass ? "softmax" : "sigmoid";
  j["l2_lambda"] = model.l2_lambda;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["final_loss"] = model.final_loss;
  return j.dump() + "\n";
}

ProbeModel probe_from_json(const std::string& text) {
  ProbeModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "softmax" && mode != "sigmoid") throw ParseError("probe: unknown mode '" + mode + "'");
    m.mode = mode == "softmax" ? ProbeMode::SoftmaxMulticlass : ProbeMode::SigmoidMultilabel;
    m.l2_lambda = j.at("l2_lambda").get<double>();
    m.weights = j.at("weights").get<Matrix>();
    m.bias = j.at("bias").get<std::vector<double>>();
    m.final_loss = j.at("final_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("probe: ") + e.what());
  }
  if (m.weights.size() != m.bias.size()) throw ParseError("probe: weights and bias disagree on class count");
  return m;
}

std::string schedule_to_json(const LrSchedule& s) {
  nlohmann::json j;
  j["base_lr"] = s.base_lr;
  j["warmup_iters"] = s.warmup_iters;
  j["total_iters"] = s.total_iters;
  j["num_reductions"] = s.num_reductions;
  j["factor"] = s.factor;
  j["plateau_len"] = s.plateau_len;
  j["values"] = s.values;
  return j.dump() + "\n";
}

}  // namespace corpusforge::eval
