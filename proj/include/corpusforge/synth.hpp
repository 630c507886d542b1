#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corpusforge/frames.hpp"
#include "corpusforge/manifest.hpp"

// Synthetic data generators with known ground truth.
namespace corpusforge::synth {

/// Corpus whose videos each carry exactly one hashtag equal to a label name;
/// label i gets a share proportional to 1/(i+1)^exponent of `videos`.
struct ZipfCorpus {
  Corpus corpus;
  LabelSpace space;
  std::map<std::string, std::uint64_t> truth;  // label -> count
};

ZipfCorpus zipf_corpus(std::size_t videos, std::size_t labels, double exponent, std::uint64_t seed,
                       double min_duration_s = 1.0, double max_duration_s = 60.0);

/// Corpus with exactly the given per-label counts (one hashtag per video).
ZipfCorpus corpus_with_counts(const std::map<std::string, std::uint64_t>& counts, std::uint64_t seed,
                              double min_duration_s = 1.0, double max_duration_s = 60.0);

/// One sinusoidal grating in unit image coordinates.
struct Grating {
  double angle = 0.0;      // radians
  double frequency = 4.0;  // cycles per image side
  double phase = 0.0;
  double velocity = 0.0;   // radians per second
  double amplitude = 40.0;
};

struct VideoParams {
  std::vector<Grating> gratings;
  double duration_s = 2.0;
  double fps = 16.0;
  int width = 112;
  int height = 112;
  double time_offset_s = 0.0;  // content time of frame 0
  std::uint64_t seed = 0;
};

/// Random gratings for a new piece of content.
VideoParams random_video(std::uint64_t seed, double duration_s = 2.0, int side = 112, double fps = 16.0);

/// Procedurally rendered grayscale video. Content is a continuous function
/// of (x / width, y / height, t) so renders at different sizes or time
/// offsets show the same scene.
class GratingVideo : public dedup::FrameSource {
 public:
  explicit GratingVideo(VideoParams params);
  std::size_t frame_count() const override { return count_; }
  double fps() const override { return params_.fps; }
  dedup::Image frame(std::size_t index) const override;
  const VideoParams& params() const { return params_; }

 private:
  VideoParams params_;
  std::size_t count_;
};

}  // namespace corpusforge::synth
