#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace corpusforge::dedup {

/// Row-major 8-bit image with 1 (gray) or 3 (RGB, interleaved) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c = 1) : width(w), height(h), channels(c), pixels(std::size_t(w) * h * c) {}

  std::uint8_t& at(int y, int x, int c = 0) { return pixels[(std::size_t(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c = 0) const {
    return pixels[(std::size_t(y) * width + x) * channels + c];
  }
};

/// Random-access source of decoded frames at a fixed frame rate.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t frame_count() const = 0;
  virtual double fps() const = 0;
  virtual Image frame(std::size_t index) const = 0;
};

/// ITU-R BT.601 luma (0.299, 0.587, 0.114); gray input is returned as is.
Image to_gray(const Image& img);

/// Bilinear resize with pixel-center alignment.
Image resize_bilinear(const Image& img, int width, int height);

/// In-memory frames, also the decoded form of a raw-frames file.
class MemoryFrames : public FrameSource {
 public:
  MemoryFrames(std::vector<Image> frames, double fps);
  std::size_t frame_count() const override { return frames_.size(); }
  double fps() const override { return fps_; }
  Image frame(std::size_t index) const override { return frames_.at(index); }

 private:
  std::vector<Image> frames_;
  double fps_;
};

/// Raw-frames file: "CFVD", u32 width, u32 height, u32 frame count, f32 fps,
/// then row-major u8 grayscale frames. Little-endian.
std::unique_ptr<MemoryFrames> read_raw_frames(const std::filesystem::path& path);
void write_raw_frames(const FrameSource& src, const std::filesystem::path& path);

}  // namespace corpusforge::dedup
