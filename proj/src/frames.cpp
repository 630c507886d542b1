#include "corpusforge/frames.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "corpusforge/binary_io.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge::dedup {

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw ValidationError("to_gray: expected 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double luma = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
      out.at(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.width < 1 || img.height < 1 || width < 1 || height < 1) {
    throw ValidationError("resize_bilinear: empty image");
  }
  if (img.width == width && img.height == height) return img;
  Image out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bottom = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(top * (1 - wy) + bottom * wy), 0L, 255L));
      }
    }
  }
  return out;
}

MemoryFrames::MemoryFrames(std::vector<Image> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
  if (!(fps > 0.0)) throw ValidationError("frame rate must be > 0");
}

std::unique_ptr<MemoryFrames> read_raw_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  binio::expect_magic(in, "CFVD");
  const auto width = binio::get<std::uint32_t>(in, "width");
  const auto height = binio::get<std::uint32_t>(in, "height");
  const auto count = binio::get<std::uint32_t>(in, "frame count");
  const auto fps = binio::get<float>(in, "fps");
  if (width == 0 || height == 0 || width > 1u << 15 || height > 1u << 15) {
    throw ParseError("raw frames: implausible dimensions in '" + path.string() + "'");
  }
  std::vector<Image> frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Image f(static_cast<int>(width), static_cast<int>(height), 1);
    if (!in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()))) {
      throw ParseError("raw frames: truncated frame " + std::to_string(i) + " in '" + path.string() + "'");
    }
    frames.push_back(std::move(f));
  }
  return std::make_unique<MemoryFrames>(std::move(frames), fps);
}

void write_raw_frames(const FrameSource& src, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t n = src.frame_count();
  if (n == 0) throw ValidationError("raw frames: no frames to write");
  const Image first = to_gray(src.frame(0));
  out.write("CFVD", 4);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(first.width));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(first.height));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  binio::put<float>(out, static_cast<float>(src.fps()));
  for (std::size_t i = 0; i < n; ++i) {
    const Image g = i == 0 ? first : to_gray(src.frame(i));
    if (g.width != first.width || g.height != first.height) {
      throw ValidationError("raw frames: frame " + std::to_string(i) + " changes size");
    }
    out.write(reinterpret_cast<const char*>(g.pixels.data()), static_cast<std::streamsize>(g.pixels.size()));
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace corpusforge::dedup
