#include "corpusforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"

namespace corpusforge::synth {

namespace {

std::string label_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "label%04zu", i);
  return buf;
}

std::vector<Grating> random_gratings(Rng& rng) {
  std::vector<Grating> g(3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto& c = g[i];
    c.angle = rng.uniform(0.0, std::numbers::pi);
    c.frequency = rng.uniform(10.0, 40.0);
    c.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    c.velocity = rng.uniform(-3.0, 3.0);
    // Two strong gratings set the local-pattern statistics of the scene.
    c.amplitude = i < 2 ? rng.uniform(30.0, 60.0) : rng.uniform(5.0, 15.0);
  }
  return g;
}

}  // namespace

ZipfCorpus corpus_with_counts(const std::map<std::string, std::uint64_t>& counts, std::uint64_t seed,
                              double min_duration_s, double max_duration_s) {
  ZipfCorpus out;
  out.space.name = "synthetic";
  out.space.kind = LabelKind::Seed;
  out.space.min_count = 1;
  Rng rng(derive_seed(seed, "synthetic-corpus"));
  std::size_t next_id = 0;
  for (const auto& [label, n] : counts) {
    out.space.entries[label] = {label};
    out.truth[label] = n;
    for (std::uint64_t i = 0; i < n; ++i) {
      VideoRecord v;
      char buf[32];
      std::snprintf(buf, sizeof buf, "vid%07zu", next_id++);
      v.id = buf;
      v.duration_s = quantize_seconds(rng.uniform(min_duration_s, max_duration_s));
      v.hashtags = {label};
      out.corpus.push_back(std::move(v));
    }
  }
  return out;
}

ZipfCorpus zipf_corpus(std::size_t videos, std::size_t labels, double exponent, std::uint64_t seed,
                       double min_duration_s, double max_duration_s) {
  if (labels == 0 || videos < labels) throw ValidationError("zipf_corpus: need videos >= labels >= 1");
  std::vector<double> w(labels);
  double z = 0.0;
  for (std::size_t i = 0; i < labels; ++i) z += w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  // Largest-remainder apportionment with a floor of one video per label.
  std::vector<std::uint64_t> n(labels, 1);
  const std::size_t spare = videos - labels;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < labels; ++i) {
    const double exact = spare * w[i] / z;
    const auto whole = static_cast<std::uint64_t>(exact);
    n[i] += whole;
    used += whole;
    rem.emplace_back(exact - static_cast<double>(whole), i);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; used < spare; ++k, ++used) ++n[rem[k].second];
  std::map<std::string, std::uint64_t> counts;
  for (std::size_t i = 0; i < labels; ++i) counts[label_name(i)] = n[i];
  return corpus_with_counts(counts, seed, min_duration_s, max_duration_s);
}

VideoParams random_video(std::uint64_t seed, double duration_s, int side, double fps) {
  Rng rng(derive_seed(seed, "grating-video"));
  VideoParams p;
  p.gratings = random_gratings(rng);
  p.duration_s = duration_s;
  p.width = p.height = side;
  p.fps = fps;
  p.seed = seed;
  return p;
}

GratingVideo::GratingVideo(VideoParams params) : params_(std::move(params)) {
  if (params_.width < 3 || params_.height < 3) throw ValidationError("GratingVideo: frame too small");
  if (!(params_.fps > 0.0) || !(params_.duration_s > 0.0)) {
    throw ValidationError("GratingVideo: fps and duration must be > 0");
  }
  count_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params_.duration_s * params_.fps)));
}

dedup::Image GratingVideo::frame(std::size_t index) const {
  const double t = params_.time_offset_s + static_cast<double>(index) / params_.fps;
  const auto& gratings = params_.gratings;
  const int w = params_.width;
  const int h = params_.height;
  std::vector<double> acc(static_cast<std::size_t>(w) * h, 128.0);
  std::vector<std::complex<double>> col(w), row(h);
  for (const auto& g : gratings) {
    const double kx = 2.0 * std::numbers::pi * g.frequency * std::cos(g.angle);
    const double ky = 2.0 * std::numbers::pi * g.frequency * std::sin(g.angle);
    // sin(kx*u + ky*v + phi) = Im(e^{i kx u} * e^{i (ky v + phi)})
    for (int x = 0; x < w; ++x) col[x] = std::polar(1.0, kx * (x + 0.5) / w);
    for (int y = 0; y < h; ++y) row[y] = std::polar(g.amplitude, ky * (y + 0.5) / h + g.phase + g.velocity * t);
    for (int y = 0; y < h; ++y) {
      double* line = &acc[static_cast<std::size_t>(y) * w];
      for (int x = 0; x < w; ++x) line[x] += (row[y] * col[x]).imag();
    }
  }
  dedup::Image img(w, h, 1);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[i]), 0L, 255L));
  }
  return img;
}

}  // namespace corpusforge::synth
