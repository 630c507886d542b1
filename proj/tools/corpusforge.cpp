// corpusforge command-line front end.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corpusforge/dedup.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/evalharness.hpp"
#include "corpusforge/labelspace.hpp"
#include "corpusforge/manifest.hpp"
#include "corpusforge/net.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/sampling.hpp"
#include "corpusforge/synth.hpp"
#include "corpusforge/temporal.hpp"
#include "corpusforge/tensor.hpp"

namespace fs = std::filesystem;
using namespace corpusforge;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

eval::ProbeMode parse_probe_mode(const std::string& s) {
  if (s == "multiclass") return eval::ProbeMode::SoftmaxMulticlass;
  if (s == "multilabel") return eval::ProbeMode::SigmoidMultilabel;
  throw ParseError("unknown probe mode '" + s + "' (multiclass|multilabel)");
}

// Four-byte magic of a weight file.
std::string file_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string magic(4, '\0');
  in.read(magic.data(), 4);
  return in ? magic : std::string();
}

// A network file, or a bare conv weight tensor wrapped as a one-layer net.
tensor::NetSpec load_net_or_conv(const fs::path& path) {
  if (file_magic(path) == "WTSN") return tensor::load_net(path);
  auto w = tensor::load_tensor(path);
  if (w.rank() != 4 && w.rank() != 5) {
    throw ValidationError("'" + path.string() + "' is neither a network nor a conv weight tensor");
  }
  tensor::ConvLayer c;
  c.bias = tensor::Tensor({w.dim(0)});
  c.weights = std::move(w);
  tensor::NetSpec net;
  net.layers.emplace_back(std::move(c));
  return net;
}

std::vector<dedup::VideoInput> load_videos(const fs::path& where) {
  std::vector<fs::path> files;
  if (fs::is_directory(where)) {
    for (const auto& e : fs::directory_iterator(where)) {
      if (e.is_regular_file() && e.path().extension() == ".cfvd") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    std::ifstream in(where);
    if (!in) throw IoError("cannot open '" + where.string() + "'");
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line[0] == '#') continue;
      fs::path p(line);
      files.push_back(p.is_relative() ? where.parent_path() / p : p);
    }
  }
  if (files.empty()) throw ValidationError("no .cfvd videos found in '" + where.string() + "'");
  std::vector<dedup::VideoInput> out;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const auto id = f.stem().string();
    if (!seen.insert(id).second) throw ValidationError("duplicate video id '" + id + "'");
    out.push_back({id, std::shared_ptr<const dedup::FrameSource>(dedup::read_raw_frames(f))});
  }
  return out;
}

struct Groups {
  std::vector<std::size_t> begin;  // first row of each video
};

// Consecutive blocks of `clips` rows form one video.
Groups clip_groups(std::size_t rows, std::size_t clips) {
  if (clips == 0 || rows % clips != 0) {
    throw ValidationError(std::to_string(rows) + " rows do not split into groups of " + std::to_string(clips));
  }
  Groups g;
  for (std::size_t r = 0; r < rows; r += clips) g.begin.push_back(r);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpusforge: web-video corpus construction and evaluation tools"};
  app.require_subcommand(1);

  // manifest ------------------------------------------------------------------
  auto* manifest_cmd = app.add_subcommand("manifest", "Dataset manifest utilities");
  manifest_cmd->require_subcommand(1);
  auto* validate_cmd = manifest_cmd->add_subcommand("validate", "Check a manifest file");
  std::string mv_path, mv_corpus, mv_space;
  validate_cmd->add_option("path", mv_path, "Manifest JSONL")->required();
  validate_cmd->add_option("--corpus", mv_corpus, "Also check ids and clip containment");
  validate_cmd->add_option("--labelspace", mv_space, "Also check labels");
  validate_cmd->callback([&] {
    const auto m = load_manifest(mv_path);
    std::optional<Corpus> corpus;
    std::optional<LabelSpace> space;
    if (!mv_corpus.empty()) corpus = load_corpus(mv_corpus);
    if (!mv_space.empty()) space = labelspace::load_label_space(mv_space);
    validate_manifest(m, corpus ? &*corpus : nullptr, space ? &*space : nullptr);
    std::set<std::string> labels;
    for (const auto& r : m.rows) labels.insert(r.label);
    std::printf("ok: %zu rows, %zu labels, seed %llu\n", m.rows.size(), labels.size(),
                static_cast<unsigned long long>(m.seed));
  });

  // corpus --------------------------------------------------------------------
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* stats_cmd = corpus_cmd->add_subcommand("stats", "Per-label video counts");
  std::string cs_corpus, cs_space;
  stats_cmd->add_option("corpus", cs_corpus, "Corpus JSONL")->required();
  stats_cmd->add_option("--labelspace", cs_space, "Label space JSON")->required();
  stats_cmd->callback([&] {
    const auto corpus = load_corpus(cs_corpus);
    const auto space = labelspace::load_label_space(cs_space);
    const auto hist = label_histogram(corpus, space);
    const HashtagIndex index(space);
    std::size_t matched = 0;
    for (const auto& v : corpus) matched += !index.matched_labels(v).empty();
    std::vector<std::pair<std::uint64_t, std::string>> rows;
    for (const auto& [label, n] : hist.counts) rows.emplace_back(n, label);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::printf("videos\t%zu\nmatched\t%zu\nlabels\t%zu\n", corpus.size(), matched, space.entries.size());
    for (const auto& [n, label] : rows) std::printf("%s\t%llu\n", label.c_str(), static_cast<unsigned long long>(n));
  });

  auto* synth_corpus_cmd = corpus_cmd->add_subcommand("synth", "Synthetic Zipf-distributed corpus and label space");
  std::size_t sc_videos = 1000, sc_labels = 10;
  double sc_exponent = 1.0, sc_min = 1.0, sc_max = 60.0;
  std::uint64_t sc_seed = 0;
  std::string sc_out, sc_space_out;
  synth_corpus_cmd->add_option("--videos", sc_videos)->capture_default_str();
  synth_corpus_cmd->add_option("--labels", sc_labels)->capture_default_str();
  synth_corpus_cmd->add_option("--exponent", sc_exponent)->capture_default_str();
  synth_corpus_cmd->add_option("--min-duration", sc_min)->capture_default_str();
  synth_corpus_cmd->add_option("--max-duration", sc_max)->capture_default_str();
  synth_corpus_cmd->add_option("--seed", sc_seed)->capture_default_str();
  synth_corpus_cmd->add_option("-o,--output", sc_out, "Corpus JSONL")->required();
  synth_corpus_cmd->add_option("--labelspace-out", sc_space_out, "Matching label space JSON");
  synth_corpus_cmd->callback([&] {
    const auto z = synth::zipf_corpus(sc_videos, sc_labels, sc_exponent, sc_seed, sc_min, sc_max);
    save_corpus(z.corpus, sc_out);
    if (!sc_space_out.empty()) labelspace::save_label_space(z.space, sc_space_out);
    std::printf("wrote %zu videos over %zu labels\n", z.corpus.size(), z.space.entries.size());
  });

  // labelspace ------------------------------------------------------------------
  auto* ls_cmd = app.add_subcommand("labelspace", "Label space construction");
  ls_cmd->require_subcommand(1);
  auto* build_cmd = ls_cmd->add_subcommand("build", "Build a label space from seed labels and a corpus");
  std::string lb_seeds, lb_kind = "seed", lb_corpus, lb_out, lb_name;
  int lb_min = 50;
  bool lb_all_orders = false;
  build_cmd->add_option("--seeds", lb_seeds, "Seed label file, one per line")->required();
  build_cmd->add_option("--kind", lb_kind, "seed|verb|noun|verbnoun")->capture_default_str();
  build_cmd->add_option("--corpus", lb_corpus, "Corpus JSONL")->required();
  build_cmd->add_option("--min-count", lb_min)->capture_default_str();
  build_cmd->add_flag("--all-orders", lb_all_orders, "Use every word order, not just forward and reversed");
  build_cmd->add_option("--name", lb_name, "Label space name (default: file stem of -o)");
  build_cmd->add_option("-o,--output", lb_out)->required();
  build_cmd->callback([&] {
    const auto kind = parse_label_kind(lb_kind);
    const auto seeds = labelspace::load_seeds(lb_seeds, kind);
    const auto corpus = load_corpus(lb_corpus);
    const auto name = lb_name.empty() ? fs::path(lb_out).stem().string() : lb_name;
    const auto space = labelspace::build_label_space(seeds, kind, corpus, lb_min, {lb_all_orders}, name);
    labelspace::save_label_space(space, lb_out);
    std::printf("kept %zu labels\n", space.entries.size());
  });

  auto* subset_cmd = ls_cmd->add_subcommand("subset", "Random label subset (nested across k for a fixed seed)");
  std::string lsub_in, lsub_out;
  std::size_t lsub_k = 1;
  std::uint64_t lsub_seed = 0;
  subset_cmd->add_option("--in", lsub_in)->required();
  subset_cmd->add_option("--k", lsub_k)->required();
  subset_cmd->add_option("--seed", lsub_seed)->capture_default_str();
  subset_cmd->add_option("-o,--output", lsub_out)->required();
  subset_cmd->callback([&] {
    labelspace::save_label_space(sampling::subset_labels(labelspace::load_label_space(lsub_in), lsub_k, lsub_seed),
                                 lsub_out);
  });

  // sample ----------------------------------------------------------------------
  auto* sample_cmd = app.add_subcommand("sample", "Sample a training manifest");
  std::string sm_strategy = "random", sm_corpus, sm_space, sm_out;
  std::uint64_t sm_budget = 0, sm_seed = 0;
  sample_cmd->add_option("--strategy", sm_strategy, "random|sqrt|tail")->capture_default_str();
  sample_cmd->add_option("--budget", sm_budget, "Number of videos")->required();
  sample_cmd->add_option("--seed", sm_seed)->capture_default_str();
  sample_cmd->add_option("--corpus", sm_corpus)->required();
  sample_cmd->add_option("--labelspace", sm_space)->required();
  sample_cmd->add_option("-o,--output", sm_out)->required();
  sample_cmd->callback([&] {
    const auto corpus = load_corpus(sm_corpus);
    const auto space = labelspace::load_label_space(sm_space);
    const auto m = sampling::sample(corpus, space, {sampling::parse_strategy(sm_strategy), sm_budget, sm_seed});
    save_manifest(m, sm_out, &corpus);
    std::printf("wrote %zu rows\n", m.rows.size());
  });

  // dedup -----------------------------------------------------------------------
  auto* dedup_cmd = app.add_subcommand("dedup", "Flag source videos that overlap target videos");
  std::string dd_sources, dd_targets, dd_out;
  dedup::DedupParams dd_params;
  dedup_cmd->add_option("--sources", dd_sources, "Directory of .cfvd files or a list file")->required();
  dedup_cmd->add_option("--targets", dd_targets, "Directory of .cfvd files or a list file")->required();
  dedup_cmd->add_option("--tau", dd_params.tau, "Frame cosine threshold")->capture_default_str();
  dedup_cmd->add_option("--threshold", dd_params.threshold_pct, "Overlap percent to flag")->capture_default_str();
  dedup_cmd->add_option("--seed", dd_params.lsh.seed, "LSH hyperplane seed")->capture_default_str();
  dedup_cmd->add_option("--bands", dd_params.lsh.bands)->capture_default_str();
  dedup_cmd->add_option("--bits", dd_params.lsh.bits)->capture_default_str();
  dedup_cmd->add_option("--threads", dd_params.threads, "0 = all cores")->capture_default_str();
  dedup_cmd->add_option("-o,--output", dd_out, "Report directory")->required();
  dedup_cmd->callback([&] {
    const auto report = dedup::dedup_report(load_videos(dd_sources), load_videos(dd_targets), dd_params);
    dedup::write_report(report, dd_out);
    std::printf("%zu pairs with overlap, %zu flagged, %zu sources kept\n", report.pairs.size(), report.flagged.size(),
                report.kept_sources.size());
  });

  auto* video_cmd = app.add_subcommand("video", "Synthetic raw-frame videos");
  video_cmd->require_subcommand(1);
  auto* video_synth_cmd = video_cmd->add_subcommand("synth", "Render a procedural video to a .cfvd file");
  std::uint64_t vs_seed = 0;
  double vs_duration = 2.0, vs_fps = 16.0, vs_offset = 0.0;
  int vs_side = 112;
  std::string vs_out;
  video_synth_cmd->add_option("--seed", vs_seed, "Content seed")->capture_default_str();
  video_synth_cmd->add_option("--duration", vs_duration)->capture_default_str();
  video_synth_cmd->add_option("--fps", vs_fps)->capture_default_str();
  video_synth_cmd->add_option("--side", vs_side)->capture_default_str();
  video_synth_cmd->add_option("--offset", vs_offset, "Content time of the first frame")->capture_default_str();
  video_synth_cmd->add_option("-o,--output", vs_out)->required();
  video_synth_cmd->callback([&] {
    auto p = synth::random_video(vs_seed, vs_duration, vs_side, vs_fps);
    p.time_offset_s = vs_offset;
    dedup::write_raw_frames(synth::GratingVideo(p), vs_out);
  });

  // select ----------------------------------------------------------------------
  auto* select_cmd = app.add_subcommand("select", "Length-class subset under a count or duration budget");
  std::string sel_class = "short", sel_mode = "f1", sel_corpus, sel_space, sel_from, sel_out;
  std::uint64_t sel_count = 0, sel_seed = 0;
  double sel_minutes = 0.0;
  select_cmd->add_option("--class", sel_class, "short|long|long-center")->capture_default_str();
  select_cmd->add_option("--mode", sel_mode, "f1 (fixed count) | f2 (fixed minutes)")->capture_default_str();
  auto* count_opt = select_cmd->add_option("--count", sel_count, "F1 video count");
  auto* minutes_opt = select_cmd->add_option("--minutes", sel_minutes, "F2 total clip minutes");
  count_opt->excludes(minutes_opt);
  select_cmd->add_option("--seed", sel_seed)->capture_default_str();
  select_cmd->add_option("--corpus", sel_corpus)->required();
  select_cmd->add_option("--labelspace", sel_space)->required();
  select_cmd->add_option("--from", sel_from, "Restrict to the videos of this manifest");
  select_cmd->add_option("-o,--output", sel_out)->required();
  select_cmd->callback([&] {
    const auto corpus = load_corpus(sel_corpus);
    const auto space = labelspace::load_label_space(sel_space);
    Corpus pool = corpus;
    if (!sel_from.empty()) {
      std::set<std::string> ids;
      for (const auto& r : load_manifest(sel_from).rows) ids.insert(r.video_id);
      std::erase_if(pool, [&](const VideoRecord& v) { return !ids.contains(v.id); });
    }
    temporal::BudgetPlan plan;
    plan.length_class = temporal::parse_length_class(sel_class);
    if (sel_mode == "f1") {
      if (count_opt->count() == 0) throw ValidationError("--mode f1 needs --count");
      plan.mode = temporal::BudgetMode::FixedCount;
      plan.count = sel_count;
    } else if (sel_mode == "f2") {
      if (minutes_opt->count() == 0) throw ValidationError("--mode f2 needs --minutes");
      plan.mode = temporal::BudgetMode::FixedDuration;
      plan.total_minutes = sel_minutes;
    } else {
      throw ParseError("unknown budget mode '" + sel_mode + "' (f1|f2)");
    }
    const auto subset = temporal::build_length_class(pool, plan.length_class);
    const auto m = temporal::plan_budget(subset, plan, space, sel_seed);
    save_manifest(m, sel_out, &corpus);
    std::printf("wrote %zu rows, %s minutes\n", m.rows.size(), m.provenance.at("achieved_minutes").c_str());
  });

  // tensor engine ---------------------------------------------------------------
  auto* inflate_cmd = app.add_subcommand("inflate", "Inflate 2D conv weights (or a whole net) to 3D");
  std::string inf_in, inf_out;
  std::size_t inf_k = 3;
  bool inf_raw = false;
  inflate_cmd->add_option("--in", inf_in, "WTSR conv weights or WTSN network")->required();
  inflate_cmd->add_option("--k", inf_k, "Temporal extent")->capture_default_str();
  inflate_cmd->add_flag("--no-normalize", inf_raw, "Repeat weights without dividing by k");
  inflate_cmd->add_option("-o,--output", inf_out)->required();
  inflate_cmd->callback([&] {
    if (file_magic(inf_in) == "WTSN") {
      tensor::save_net(tensor::inflate_net(tensor::load_net(inf_in), inf_k, !inf_raw), inf_out);
    } else {
      tensor::save_tensor(tensor::inflate(tensor::load_tensor(inf_in), inf_k, !inf_raw), inf_out);
    }
  });

  auto* verify_cmd = app.add_subcommand("verify-inflation", "Check 2D vs inflated-3D outputs on a static clip");
  std::string vi_net;
  std::size_t vi_k = 3, vi_h = 16, vi_w = 16;
  double vi_tol = 1e-5;
  std::uint64_t vi_seed = 0;
  bool vi_raw = false;
  verify_cmd->add_option("--net", vi_net, "WTSN network or WTSR conv weights")->required();
  verify_cmd->add_option("--k", vi_k)->capture_default_str();
  verify_cmd->add_option("--tol", vi_tol)->capture_default_str();
  verify_cmd->add_option("--height", vi_h)->capture_default_str();
  verify_cmd->add_option("--width", vi_w)->capture_default_str();
  verify_cmd->add_option("--seed", vi_seed, "Random input seed")->capture_default_str();
  verify_cmd->add_flag("--no-normalize", vi_raw, "Negative control: skip the division by k");
  int verify_status = 0;
  verify_cmd->callback([&] {
    const auto net = load_net_or_conv(vi_net);
    tensor::validate_net(net);
    const auto& first = std::get<tensor::ConvLayer>(net.layers.at(0));
    Rng rng(vi_seed);
    const auto x = tensor::random_tensor(rng, {first.weights.dim(1), vi_h, vi_w});
    const auto r = tensor::inflation_equivalence(net, vi_k, x, vi_tol, !vi_raw);
    std::printf("%s max_deviation=%.3g tol=%.3g\n", r.ok ? "PASS" : "FAIL", r.max_deviation, vi_tol);
    verify_status = r.ok ? 0 : 1;
  });

  auto* fcn_cmd = app.add_subcommand("fcn", "Turn the pooled Dense head into a 1x1 convolution");
  std::string fcn_in, fcn_out;
  fcn_cmd->add_option("--in", fcn_in, "WTSN network")->required();
  fcn_cmd->add_option("-o,--output", fcn_out)->required();
  fcn_cmd->callback([&] { tensor::save_net(tensor::fcn_transform(tensor::load_net(fcn_in)), fcn_out); });

  auto* net_cmd = app.add_subcommand("net", "Network files");
  net_cmd->require_subcommand(1);
  auto* net_random_cmd = net_cmd->add_subcommand("random", "Random BN-free 2D network");
  tensor::RandomNetOptions nr_opts;
  std::uint64_t nr_seed = 0;
  bool nr_no_head = false;
  std::string nr_out;
  net_random_cmd->add_option("--seed", nr_seed)->capture_default_str();
  net_random_cmd->add_option("--in-channels", nr_opts.in_channels)->capture_default_str();
  net_random_cmd->add_option("--conv-layers", nr_opts.conv_layers)->capture_default_str();
  net_random_cmd->add_option("--max-width", nr_opts.max_width)->capture_default_str();
  net_random_cmd->add_option("--classes", nr_opts.classes)->capture_default_str();
  net_random_cmd->add_flag("--no-head", nr_no_head, "Omit GlobalAvgPool + Dense");
  net_random_cmd->add_option("-o,--output", nr_out)->required();
  net_random_cmd->callback([&] {
    nr_opts.dense_head = !nr_no_head;
    Rng rng(nr_seed);
    tensor::save_net(tensor::random_net_2d(rng, nr_opts), nr_out);
  });

  // evaluation ------------------------------------------------------------------
  auto* probe_cmd = app.add_subcommand("probe", "Linear probe on frozen features");
  probe_cmd->require_subcommand(1);
  auto* probe_train_cmd = probe_cmd->add_subcommand("train", "Fit an L2-regularized linear classifier");
  std::string pt_features, pt_mode = "multiclass", pt_out;
  eval::ProbeOptions pt_opts;
  probe_train_cmd->add_option("--features", pt_features, "CFFT feature file")->required();
  probe_train_cmd->add_option("--mode", pt_mode, "multiclass|multilabel")->capture_default_str();
  probe_train_cmd->add_option("--lambda", pt_opts.l2_lambda)->capture_default_str();
  probe_train_cmd->add_option("--iters", pt_opts.iters)->capture_default_str();
  probe_train_cmd->add_option("--step", pt_opts.step)->capture_default_str();
  probe_train_cmd->add_option("--classes", pt_opts.classes, "0 = infer from labels")->capture_default_str();
  probe_train_cmd->add_option("-o,--output", pt_out, "Model JSON")->required();
  probe_train_cmd->callback([&] {
    pt_opts.mode = parse_probe_mode(pt_mode);
    const auto set = eval::load_features(pt_features, pt_opts.mode);
    const auto model = eval::train_probe(set.features, set.targets, pt_opts);
    write_file(pt_out, eval::probe_to_json(model));
    std::printf("final loss %.6f after %zu iterations\n", model.final_loss, pt_opts.iters);
  });

  auto* probe_eval_cmd = probe_cmd->add_subcommand("eval", "Score a probe; clip rows are averaged per video");
  std::string pe_model, pe_features;
  std::size_t pe_clips = 1;
  std::vector<std::size_t> pe_topk{1, 5};
  std::string pe_average = "logits";
  probe_eval_cmd->add_option("--model", pe_model)->required();
  probe_eval_cmd->add_option("--features", pe_features)->required();
  probe_eval_cmd->add_option("--clips-per-video", pe_clips, "Consecutive rows forming one video")
      ->capture_default_str();
  probe_eval_cmd->add_option("--average", pe_average, "Average clip logits or probabilities (logits|probs)")
      ->check(CLI::IsMember({"logits", "probs"}))
      ->capture_default_str();
  probe_eval_cmd->add_option("--topk", pe_topk, "Accuracy cut-offs (multiclass)")->capture_default_str();
  probe_eval_cmd->callback([&] {
    const auto model = eval::probe_from_json(read_file(pe_model));
    const auto set = eval::load_features(pe_features, model.mode);
    const auto groups = clip_groups(set.features.size(), pe_clips);
    eval::Matrix scores;
    for (const auto b : groups.begin) {
      eval::Matrix clips;
      for (std::size_t r = b; r < b + pe_clips; ++r) clips.push_back(pe_average == "probs" ? model.probabilities(set.features[r]) : model.scores(set.features[r]));
      scores.push_back(eval::video_prediction(clips));
    }
    if (model.mode == eval::ProbeMode::SoftmaxMulticlass) {
      std::vector<std::uint32_t> labels;
      for (const auto b : groups.begin) {
        for (std::size_t r = b; r < b + pe_clips; ++r) {
          if (set.targets.classes[r] != set.targets.classes[b]) throw ValidationError("clip labels differ within a video");
        }
        labels.push_back(set.targets.classes[b]);
      }
      for (const auto k : pe_topk) {
        if (k > model.bias.size()) continue;
        std::printf("top%zu\t%.6f\n", k, eval::accuracy_topk(scores, labels, k));
      }
    } else {
      std::vector<std::vector<std::uint8_t>> truth;
      for (const auto b : groups.begin) truth.push_back(set.targets.multilabel[b]);
      const auto r = eval::mean_average_precision(scores, truth);
      std::printf("mAP\t%.6f\nskipped_labels\t%zu\n", r.map, r.skipped.size());
    }
  });

  auto* features_cmd = app.add_subcommand("features", "Feature files");
  features_cmd->require_subcommand(1);
  auto* features_synth_cmd = features_cmd->add_subcommand("synth", "Gaussian class clusters in CFFT format");
  std::size_t fs_n = 200, fs_d = 8, fs_classes = 4;
  std::string fs_mode = "multiclass", fs_out;
  std::uint64_t fs_seed = 0;
  double fs_spread = 0.5;
  features_synth_cmd->add_option("--n", fs_n)->capture_default_str();
  features_synth_cmd->add_option("--dim", fs_d)->capture_default_str();
  features_synth_cmd->add_option("--classes", fs_classes)->capture_default_str();
  features_synth_cmd->add_option("--spread", fs_spread, "Within-class standard deviation")->capture_default_str();
  features_synth_cmd->add_option("--mode", fs_mode, "multiclass|multilabel")->capture_default_str();
  features_synth_cmd->add_option("--seed", fs_seed)->capture_default_str();
  features_synth_cmd->add_option("-o,--output", fs_out)->required();
  features_synth_cmd->callback([&] {
    const auto mode = parse_probe_mode(fs_mode);
    Rng rng(fs_seed);
    eval::Matrix centres(fs_classes, std::vector<double>(fs_d));
    for (auto& c : centres)
      for (auto& v : c) v = rng.normal();
    eval::FeatureSet set;
    for (std::size_t i = 0; i < fs_n; ++i) {
      std::vector<double> x(fs_d, 0.0);
      std::vector<std::uint8_t> on(fs_classes, 0);
      const auto cls = static_cast<std::uint32_t>(rng.below(fs_classes));
      on[cls] = 1;
      if (mode == eval::ProbeMode::SigmoidMultilabel) {
        for (auto& b : on) b = b || rng.below(4) == 0;
      }
      for (std::size_t c = 0; c < fs_classes; ++c)
        if (on[c])
          for (std::size_t j = 0; j < fs_d; ++j) x[j] += centres[c][j];
      for (auto& v : x) v += fs_spread * rng.normal();
      set.features.push_back(std::move(x));
      if (mode == eval::ProbeMode::SoftmaxMulticlass) set.targets.classes.push_back(cls);
      else set.targets.multilabel.push_back(std::move(on));
    }
    eval::save_features(set, mode, fs_out);
  });

  auto* schedule_cmd = app.add_subcommand("schedule", "Step learning-rate schedule with warmup");
  double sch_base = 0.192, sch_factor = 0.5;
  std::size_t sch_red = 13, sch_total = 0, sch_warm = 0;
  std::string sch_out;
  schedule_cmd->add_option("--base", sch_base)->capture_default_str();
  schedule_cmd->add_option("--reductions", sch_red)->capture_default_str();
  schedule_cmd->add_option("--factor", sch_factor)->capture_default_str();
  schedule_cmd->add_option("--total", sch_total, "Total iterations")->required();
  schedule_cmd->add_option("--warmup", sch_warm)->capture_default_str();
  schedule_cmd->add_option("-o,--output", sch_out, "JSON output (stdout when omitted)");
  schedule_cmd->callback([&] {
    const auto json = eval::schedule_to_json(eval::lr_schedule(sch_base, sch_warm, sch_total, sch_red, sch_factor));
    if (sch_out.empty()) std::cout << json;
    else write_file(sch_out, json);
  });

  auto* eval_cmd = app.add_subcommand("eval", "Evaluation helpers");
  eval_cmd->require_subcommand(1);
  auto* clips_cmd = eval_cmd->add_subcommand("clips", "Start frames of evenly spaced test clips");
  std::size_t ec_frames = 0, ec_len = 8, ec_n = 10;
  std::string ec_spacing = "endpoint";
  clips_cmd->add_option("--frames", ec_frames)->required();
  clips_cmd->add_option("--clip-len", ec_len)->capture_default_str();
  clips_cmd->add_option("--clips", ec_n)->capture_default_str();
  clips_cmd->add_option("--spacing", ec_spacing, "endpoint|segment")->capture_default_str();
  clips_cmd->callback([&] {
    eval::ClipSpacing spacing;
    if (ec_spacing == "endpoint") spacing = eval::ClipSpacing::EndpointInclusive;
    else if (ec_spacing == "segment") spacing = eval::ClipSpacing::SegmentCenter;
    else throw ParseError("unknown spacing '" + ec_spacing + "' (endpoint|segment)");
    const auto starts = eval::uniform_clip_starts(ec_frames, ec_len, ec_n, spacing);
    for (std::size_t i = 0; i < starts.size(); ++i) std::printf("%s%zu", i ? " " : "", starts[i]);
    std::printf("\n");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const corpusforge::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return verify_status;
}
