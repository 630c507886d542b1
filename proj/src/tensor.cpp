#include "corpusforge/tensor.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "corpusforge/binary_io.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge::tensor {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + ")";
}

Layout layout_for_rank(std::size_t rank) {
  switch (rank) {
    case 2: return Layout::Dense;
    case 4: return Layout::Conv2D;
    case 5: return Layout::Conv3D;
    default: return Layout::Generic;
  }
}

void check_bias(const Tensor& bias, std::size_t out_channels) {
  if (bias.size() != out_channels) {
    throw ValidationError("bias has " + std::to_string(bias.size()) + " values, expected " +
                          std::to_string(out_channels));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, Layout layout)
    : dims_(std::move(dims)), data_(product(dims_), 0.0f), layout_(layout) {
  for (auto d : dims_) {
    if (d == 0) throw ValidationError("tensor dims must be positive, got " + shape_string(dims_));
  }
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data, Layout layout)
    : dims_(std::move(dims)), data_(std::move(data)), layout_(layout) {
  for (auto d : dims_) {
    if (d == 0) throw ValidationError("tensor dims must be positive, got " + shape_string(dims_));
  }
  if (data_.size() != product(dims_)) {
    throw ValidationError("tensor data has " + std::to_string(data_.size()) + " values, shape " +
                          shape_string(dims_) + " needs " + std::to_string(product(dims_)));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw ValidationError("tensor contains a non-finite value");
  }
}

Tensor Tensor::reshaped(std::vector<std::size_t> dims, Layout layout) const {
  return Tensor(std::move(dims), data_, layout);
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  std::size_t off = 0, i = 0;
  for (auto v : idx) off = off * dims_[i++] + v;
  return off;
}

AxisPlan plan_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding pad) {
  if (stride < 1) throw ValidationError("stride must be >= 1");
  if (pad == Padding::Valid) {
    if (kernel > in) {
      throw ValidationError("kernel " + std::to_string(kernel) + " larger than input " + std::to_string(in));
    }
    return {(in - kernel) / stride + 1, 0};
  }
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t total = needed > in ? needed - in : 0;
  return {out, total / 2};
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride, Padding pad) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.dim(0)) {
    throw ValidationError("conv2d: input " + shape_string(x.dims()) + " incompatible with weights " +
                          shape_string(w.dims()));
  }
  check_bias(bias, w.dim(0));
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const auto ph = plan_axis(H, KH, stride, pad);
  const auto pw = plan_axis(W, KW, stride, pad);
  Tensor y({O, ph.out, pw.out});
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t oy = 0; oy < ph.out; ++oy) {
      for (std::size_t ox = 0; ox < pw.out; ++ox) {
        double acc = bias[o];
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t ky = 0; ky < KH; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(ph.pad_front);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t kx = 0; kx < KW; ++kx) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pw.pad_front);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += static_cast<double>(w.at(o, c, ky, kx)) * x.at(c, iy, ix);
            }
          }
        }
        y.at(o, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return y;
}

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias, const Conv3dParams& p) {
  if (x.rank() != 4 || w.rank() != 5 || w.dim(1) != x.dim(0)) {
    throw ValidationError("conv3d: input " + shape_string(x.dims()) + " incompatible with weights " +
                          shape_string(w.dims()));
  }
  check_bias(bias, w.dim(0));
  const std::size_t C = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), KT = w.dim(2), KH = w.dim(3), KW = w.dim(4);
  const auto pt = plan_axis(T, KT, p.stride_t, p.pad_t);
  const auto ph = plan_axis(H, KH, p.stride, p.pad);
  const auto pw = plan_axis(W, KW, p.stride, p.pad);
  Tensor y({O, pt.out, ph.out, pw.out});
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t ot = 0; ot < pt.out; ++ot) {
      for (std::size_t oy = 0; oy < ph.out; ++oy) {
        for (std::size_t ox = 0; ox < pw.out; ++ox) {
          double acc = bias[o];
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t kt = 0; kt < KT; ++kt) {
              const auto it = static_cast<std::ptrdiff_t>(ot * p.stride_t + kt) - static_cast<std::ptrdiff_t>(pt.pad_front);
              if (it < 0 || it >= static_cast<std::ptrdiff_t>(T)) continue;
              for (std::size_t ky = 0; ky < KH; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * p.stride + ky) - static_cast<std::ptrdiff_t>(ph.pad_front);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t kx = 0; kx < KW; ++kx) {
                  const auto ix = static_cast<std::ptrdiff_t>(ox * p.stride + kx) - static_cast<std::ptrdiff_t>(pw.pad_front);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                  acc += static_cast<double>(w.at(o, c, kt, ky, kx)) * x.at(c, it, iy, ix);
                }
              }
            }
          }
          y.at(o, ot, oy, ox) = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

Tensor inflate(const Tensor& w2d, std::size_t k, bool normalize) {
  if (k < 1) throw ValidationError("inflate: k must be >= 1");
  if (w2d.rank() != 4) throw ValidationError("inflate: expected Conv2D weights, got " + shape_string(w2d.dims()));
  const std::size_t O = w2d.dim(0), I = w2d.dim(1), KH = w2d.dim(2), KW = w2d.dim(3);
  Tensor out({O, I, k, KH, KW}, Layout::Conv3D);
  const float scale = normalize ? 1.0f / static_cast<float>(k) : 1.0f;
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t y = 0; y < KH; ++y)
          for (std::size_t x = 0; x < KW; ++x) out.at(o, i, t, y, x) = w2d.at(o, i, y, x) * scale;
  return out;
}

std::pair<std::size_t, std::size_t> scale_shortest_edge(std::size_t h, std::size_t w, std::size_t target) {
  if (h < 1 || w < 1) throw ValidationError("scale_shortest_edge: empty frame");
  auto scaled = [&](std::size_t edge, std::size_t shortest) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(edge) * target / shortest));
  };
  return h <= w ? std::pair{target, scaled(w, h)} : std::pair{scaled(h, w), target};
}

CropWindow full_center_crop(std::size_t h, std::size_t w) {
  const std::size_t side = std::min(h, w);
  return {(h - side) / 2, (w - side) / 2, side, side};
}

void write_tensor(std::ostream& out, const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw ValidationError("write_tensor: unsupported rank");
  out.write("WTSR", 4);
  binio::put<std::uint16_t>(out, 1);
  binio::put<std::uint8_t>(out, 0);
  binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.dims()) binio::put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw IoError("write_tensor: write failed");
}

Tensor read_tensor(std::istream& in) {
  binio::expect_magic(in, "WTSR");
  const auto version = binio::get<std::uint16_t>(in, "version");
  if (version != 1) throw ParseError("WTSR: unsupported version " + std::to_string(version));
  const auto dtype = binio::get<std::uint8_t>(in, "dtype");
  if (dtype != 0) throw ParseError("WTSR: unsupported dtype " + std::to_string(dtype));
  const auto ndim = binio::get<std::uint8_t>(in, "ndim");
  if (ndim == 0) throw ParseError("WTSR: ndim must be >= 1");
  std::vector<std::size_t> dims(ndim);
  std::size_t n = 1;
  for (auto& d : dims) {
    const auto v = binio::get<std::uint64_t>(in, "dims");
    if (v == 0 || v > (1ull << 32)) throw ParseError("WTSR: implausible dimension " + std::to_string(v));
    d = static_cast<std::size_t>(v);
    n *= d;
    if (n > (1ull << 32)) throw ParseError("WTSR: tensor too large");
  }
  std::vector<float> data(n);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw ParseError("WTSR: truncated payload");
  }
  return Tensor(std::move(dims), std::move(data), layout_for_rank(ndim));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  auto t = read_tensor(in);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("WTSR: trailing bytes after payload");
  return t;
}

}  // namespace corpusforge::tensor
