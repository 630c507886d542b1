#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace corpusforge::tensor {

enum class Layout { Generic, Conv2D, Conv3D, Dense };

/// Dense row-major f32 tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, Layout layout = Layout::Generic);
  Tensor(std::vector<std::size_t> dims, std::vector<float> data, Layout layout = Layout::Generic);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  Layout layout() const { return layout_; }
  void set_layout(Layout l) { layout_ = l; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  template <typename... I>
  float& at(I... idx) { return data_[offset({static_cast<std::size_t>(idx)...})]; }
  template <typename... I>
  float at(I... idx) const { return data_[offset({static_cast<std::size_t>(idx)...})]; }

  Tensor reshaped(std::vector<std::size_t> dims, Layout layout) const;

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  std::vector<std::size_t> dims_;
  std::vector<float> data_;
  Layout layout_ = Layout::Generic;
};

using WeightTensor = Tensor;

enum class Padding { Valid, Same };

/// Front padding and output length for one axis. Same padding follows the
/// usual ceil(in / stride) convention with any odd pixel at the back.
struct AxisPlan {
  std::size_t out = 0;
  std::size_t pad_front = 0;
};
AxisPlan plan_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding pad);

/// Cross-correlation of x (c,h,w) with w (o,c,kh,kw) plus bias (o); zero padding.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride = 1,
                      Padding pad = Padding::Valid);

struct Conv3dParams {
  std::size_t stride = 1;    // spatial
  std::size_t stride_t = 1;  // temporal
  Padding pad = Padding::Valid;
  Padding pad_t = Padding::Valid;
};

/// Cross-correlation of x (c,t,h,w) with w (o,c,kt,kh,kw) plus bias (o).
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias, const Conv3dParams& p = {});

/// out[o,i,t,h,w] = w2d[o,i,h,w] / k for t in [0, k). Without normalization
/// the 2D weights are repeated unchanged.
Tensor inflate(const Tensor& w2d, std::size_t k, bool normalize = true);

/// (h, w) scaled so the shorter edge equals `target`, aspect ratio kept to
/// the nearest integer.
std::pair<std::size_t, std::size_t> scale_shortest_edge(std::size_t h, std::size_t w, std::size_t target = 128);

struct CropWindow {
  std::size_t top = 0, left = 0, height = 0, width = 0;
};

/// Largest centred square inside (h, w).
CropWindow full_center_crop(std::size_t h, std::size_t w);

/// Weight file: "WTSR", u16 version=1, u8 dtype (0 = f32), u8 ndim,
/// ndim x u64 dims, f32 payload; all little-endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace corpusforge::tensor
