#include "corpusforge/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "corpusforge/binary_io.hpp"
#include "corpusforge/error.hpp"
#include "json.hpp"

namespace corpusforge::tensor {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Tensor global_avg_pool(const Tensor& x, std::optional<TimeRange> time) {
  if (x.rank() < 2) throw ValidationError("GlobalAvgPool needs a (c, ...) feature map");
  const std::size_t C = x.dim(0);
  const std::size_t per = x.size() / C;
  Tensor y({C});
  if (time && x.rank() == 4) {
    const std::size_t HW = x.dim(2) * x.dim(3);
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t t = time->lo; t <= time->hi; ++t) {
        for (std::size_t i = 0; i < HW; ++i) acc += x[c * per + t * HW + i];
      }
      y[c] = static_cast<float>(acc / static_cast<double>((time->hi - time->lo + 1) * HW));
    }
    return y;
  }
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per; ++i) acc += x[c * per + i];
    y[c] = static_cast<float>(acc / static_cast<double>(per));
  }
  return y;
}

Tensor dense_forward(const Tensor& x, const DenseLayer& d) {
  if (x.rank() != 1 || d.weights.rank() != 2 || d.weights.dim(1) != x.dim(0) || d.bias.size() != d.weights.dim(0)) {
    throw ValidationError("Dense: input of size " + std::to_string(x.size()) + " does not match weights");
  }
  const std::size_t O = d.weights.dim(0), I = d.weights.dim(1);
  Tensor y({O});
  for (std::size_t o = 0; o < O; ++o) {
    double acc = d.bias[o];
    for (std::size_t i = 0; i < I; ++i) acc += static_cast<double>(d.weights.at(o, i)) * x[i];
    y[o] = static_cast<float>(acc);
  }
  return y;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1) throw ValidationError("Softmax expects a vector");
  const float mx = *std::max_element(x.data().begin(), x.data().end());
  double z = 0.0;
  for (float v : x.data()) z += std::exp(static_cast<double>(v) - mx);
  Tensor y({x.size()});
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(std::exp(static_cast<double>(x[i]) - mx) / z);
  return y;
}

std::string pad_name(Padding p) { return p == Padding::Same ? "same" : "valid"; }
Padding parse_pad(const std::string& s) {
  if (s == "same") return Padding::Same;
  if (s == "valid") return Padding::Valid;
  throw ParseError("unknown padding '" + s + "'");
}

}  // namespace

ForwardResult forward(const NetSpec& net, const Tensor& x, const ForwardOptions& opts) {
  ForwardResult r{x, std::nullopt};
  // Tracked but empty once temporal padding reaches every output step.
  bool time_tracked = x.rank() == 4;
  if (time_tracked) r.valid_time = TimeRange{0, x.dim(1) - 1};
  for (const auto& layer : net.layers) {
    std::visit(overloaded{
                   [&](const ConvLayer& c) {
                     if (c.is_3d()) {
                       const Conv3dParams p{c.stride, c.stride_t, c.pad, c.pad_t};
                       const std::size_t T = r.output.rank() == 4 ? r.output.dim(1) : 0;
                       r.output = conv3d_forward(r.output, c.weights, c.bias, p);
                       if (r.valid_time) {
                         const std::size_t kt = c.weights.dim(2);
                         const auto plan = plan_axis(T, kt, c.stride_t, c.pad_t);
                         // Output step s reads inputs [s*stride - front, s*stride - front + kt - 1].
                         std::optional<TimeRange> next;
                         for (std::size_t s = 0; s < plan.out; ++s) {
                           const auto first = static_cast<std::ptrdiff_t>(s * c.stride_t) -
                                              static_cast<std::ptrdiff_t>(plan.pad_front);
                           const auto last = first + static_cast<std::ptrdiff_t>(kt) - 1;
                           if (first < static_cast<std::ptrdiff_t>(r.valid_time->lo) ||
                               last > static_cast<std::ptrdiff_t>(r.valid_time->hi)) {
                             continue;
                           }
                           if (!next) next = TimeRange{s, s};
                           next->hi = s;
                         }
                         r.valid_time = next;
                       }
                     } else {
                       r.output = conv2d_forward(r.output, c.weights, c.bias, c.stride, c.pad);
                     }
                   },
                   [&](const ReluLayer&) {
                     for (float& v : r.output.data()) v = std::max(v, 0.0f);
                   },
                   [&](const GlobalAvgPoolLayer&) {
                     if (opts.pool_valid_time_only && time_tracked && !r.valid_time) {
                       throw ValidationError("no temporally valid output remains");
                     }
                     time_tracked = false;
                     r.output = global_avg_pool(r.output, opts.pool_valid_time_only ? r.valid_time : std::nullopt);
                     r.valid_time.reset();
                   },
                   [&](const DenseLayer& d) { r.output = dense_forward(r.output, d); },
                   [&](const SoftmaxLayer&) { r.output = softmax(r.output); },
               },
               layer);
  }
  return r;
}

void validate_net(const NetSpec& net) {
  std::optional<std::size_t> channels;
  bool pooled = false;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (c->weights.rank() != 4 && c->weights.rank() != 5) throw ValidationError(where + "conv weights must be rank 4 or 5");
      if (c->bias.size() != c->weights.dim(0)) throw ValidationError(where + "conv bias size mismatch");
      if (pooled) throw ValidationError(where + "convolution after global pooling");
      if (channels && *channels != c->weights.dim(1)) throw ValidationError(where + "input channel mismatch");
      channels = c->weights.dim(0);
    } else if (std::holds_alternative<GlobalAvgPoolLayer>(layer)) {
      if (pooled) throw ValidationError(where + "pooling twice");
      pooled = true;
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (!pooled) throw ValidationError(where + "Dense must follow GlobalAvgPool");
      if (d->weights.rank() != 2 || d->bias.size() != d->weights.dim(0)) throw ValidationError(where + "bad Dense shapes");
      if (channels && *channels != d->weights.dim(1)) throw ValidationError(where + "Dense input size mismatch");
      const bool last = i + 1 == net.layers.size();
      const bool before_softmax = i + 2 == net.layers.size() && std::holds_alternative<SoftmaxLayer>(net.layers.back());
      if (!last && !before_softmax) throw ValidationError(where + "Dense must be terminal");
      channels = d->weights.dim(0);
    } else if (std::holds_alternative<SoftmaxLayer>(layer)) {
      if (i + 1 != net.layers.size()) throw ValidationError(where + "Softmax must be last");
    }
  }
}

std::size_t conv_layer_count(const NetSpec& net) {
  return static_cast<std::size_t>(std::count_if(net.layers.begin(), net.layers.end(),
                                                [](const Layer& l) { return std::holds_alternative<ConvLayer>(l); }));
}

NetSpec inflate_net(const NetSpec& net2d, std::size_t k, bool normalize) {
  if (k < 1) throw ValidationError("inflate_net: k must be >= 1");
  validate_net(net2d);
  NetSpec out;
  for (const auto& layer : net2d.layers) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (c->is_3d()) throw ValidationError("inflate_net: network already has 3D convolutions");
      ConvLayer inflated = *c;
      inflated.weights = inflate(c->weights, k, normalize);
      inflated.stride_t = 1;
      inflated.pad_t = Padding::Same;
      out.layers.emplace_back(std::move(inflated));
    } else {
      out.layers.push_back(layer);
    }
  }
  return out;
}

EquivalenceResult inflation_equivalence(const NetSpec& net2d, std::size_t k, const Tensor& x2d, double tol,
                                        bool normalize) {
  if (x2d.rank() != 3) throw ValidationError("inflation_equivalence: expected a (c,h,w) input");
  const NetSpec net3d = inflate_net(net2d, k, normalize);
  const std::size_t frames = std::max(k, conv_layer_count(net2d) * (k - 1) + 1);
  const std::size_t C = x2d.dim(0), H = x2d.dim(1), W = x2d.dim(2);
  Tensor x3d({C, frames, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) x3d.at(c, t, y, x) = x2d.at(c, y, x);

  const Tensor ref = forward(net2d, x2d).output;
  const auto got = forward(net3d, x3d, {.pool_valid_time_only = true});

  Tensor cmp = got.output;
  if (got.output.rank() == 4) {
    // No pooling happened: compare the central valid time step.
    if (!got.valid_time) throw ValidationError("inflation_equivalence: no temporally valid output");
    const std::size_t t = (got.valid_time->lo + got.valid_time->hi) / 2;
    const std::size_t O = got.output.dim(0), Ho = got.output.dim(2), Wo = got.output.dim(3);
    cmp = Tensor({O, Ho, Wo});
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t x = 0; x < Wo; ++x) cmp.at(o, y, x) = got.output.at(o, t, y, x);
  }
  if (cmp.dims() != ref.dims()) throw ValidationError("inflation_equivalence: output shapes differ");
  EquivalenceResult res;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    res.max_deviation = std::max(res.max_deviation, std::abs(static_cast<double>(cmp[i]) - ref[i]));
  }
  res.ok = res.max_deviation <= tol;
  return res;
}

NetSpec fcn_transform(const NetSpec& net) {
  validate_net(net);
  std::ptrdiff_t dense_at = -1;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (std::holds_alternative<DenseLayer>(net.layers[i])) dense_at = static_cast<std::ptrdiff_t>(i);
  }
  if (dense_at < 0) throw ValidationError("fcn_transform: network has no Dense layer");
  if (dense_at == 0 || !std::holds_alternative<GlobalAvgPoolLayer>(net.layers[dense_at - 1])) {
    throw ValidationError("fcn_transform: Dense must directly follow GlobalAvgPool");
  }
  bool any_2d = false;
  for (const auto& l : net.layers) {
    if (const auto* c = std::get_if<ConvLayer>(&l)) any_2d |= !c->is_3d();
  }
  const auto& dense = std::get<DenseLayer>(net.layers[dense_at]);
  const std::size_t O = dense.weights.dim(0), I = dense.weights.dim(1);
  ConvLayer conv;
  conv.weights = any_2d ? dense.weights.reshaped({O, I, 1, 1}, Layout::Conv2D)
                        : dense.weights.reshaped({O, I, 1, 1, 1}, Layout::Conv3D);
  conv.bias = dense.bias;
  conv.pad = conv.pad_t = Padding::Valid;

  NetSpec out;
  out.layers.assign(net.layers.begin(), net.layers.begin() + (dense_at - 1));
  out.layers.emplace_back(std::move(conv));
  out.layers.emplace_back(GlobalAvgPoolLayer{});
  out.layers.insert(out.layers.end(), net.layers.begin() + dense_at + 1, net.layers.end());
  return out;
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> dims, double scale, Layout layout) {
  Tensor t(std::move(dims), layout);
  for (float& v : t.data()) v = static_cast<float>(rng.normal() * scale);
  return t;
}

NetSpec random_net_2d(Rng& rng, const RandomNetOptions& opts) {
  NetSpec net;
  std::size_t channels = opts.in_channels;
  for (std::size_t l = 0; l < opts.conv_layers; ++l) {
    const std::size_t out = 1 + rng.below(opts.max_width);
    const std::size_t kernel = rng.below(2) ? 3 : 1;
    ConvLayer c;
    c.weights = random_tensor(rng, {out, channels, kernel, kernel},
                              1.0 / std::sqrt(static_cast<double>(channels * kernel * kernel)), Layout::Conv2D);
    c.bias = random_tensor(rng, {out}, 0.1);
    c.pad = Padding::Same;
    c.stride = rng.below(4) == 0 ? 2 : 1;
    net.layers.emplace_back(std::move(c));
    if (opts.relu) net.layers.emplace_back(ReluLayer{});
    channels = out;
  }
  if (opts.dense_head) {
    net.layers.emplace_back(GlobalAvgPoolLayer{});
    net.layers.emplace_back(DenseLayer{random_tensor(rng, {opts.classes, channels},
                                                     1.0 / std::sqrt(static_cast<double>(channels)), Layout::Dense),
                                       random_tensor(rng, {opts.classes}, 0.1)});
  }
  return net;
}

void save_net(const NetSpec& net, const std::filesystem::path& path) {
  validate_net(net);
  nlohmann::json table = nlohmann::json::array();
  std::vector<const Tensor*> tensors;
  for (const auto& layer : net.layers) {
    std::visit(overloaded{
                   [&](const ConvLayer& c) {
                     table.push_back({{"type", "conv"},
                                      {"stride", c.stride},
                                      {"pad", pad_name(c.pad)},
                                      {"stride_t", c.stride_t},
                                      {"pad_t", pad_name(c.pad_t)}});
                     tensors.push_back(&c.weights);
                     tensors.push_back(&c.bias);
                   },
                   [&](const ReluLayer&) { table.push_back({{"type", "relu"}}); },
                   [&](const GlobalAvgPoolLayer&) { table.push_back({{"type", "global_avg_pool"}}); },
                   [&](const DenseLayer& d) {
                     table.push_back({{"type", "dense"}});
                     tensors.push_back(&d.weights);
                     tensors.push_back(&d.bias);
                   },
                   [&](const SoftmaxLayer&) { table.push_back({{"type", "softmax"}}); },
               },
               layer);
  }
  const std::string header = table.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write("WTSN", 4);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto* t : tensors) write_tensor(out, *t);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

NetSpec load_net(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  binio::expect_magic(in, "WTSN");
  const auto len = binio::get<std::uint32_t>(in, "layer table length");
  if (len > (1u << 24)) throw ParseError("WTSN: layer table too large");
  std::string header(len, '\0');
  if (!in.read(header.data(), len)) throw ParseError("WTSN: truncated layer table");
  nlohmann::json table;
  try {
    table = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("WTSN: ") + e.what());
  }
  NetSpec net;
  try {
    for (const auto& entry : table) {
      const auto type = entry.at("type").get<std::string>();
      if (type == "conv") {
        ConvLayer c;
        c.stride = entry.at("stride").get<std::size_t>();
        c.pad = parse_pad(entry.at("pad").get<std::string>());
        c.stride_t = entry.at("stride_t").get<std::size_t>();
        c.pad_t = parse_pad(entry.at("pad_t").get<std::string>());
        c.weights = read_tensor(in);
        c.bias = read_tensor(in);
        net.layers.emplace_back(std::move(c));
      } else if (type == "relu") {
        net.layers.emplace_back(ReluLayer{});
      } else if (type == "global_avg_pool") {
        net.layers.emplace_back(GlobalAvgPoolLayer{});
      } else if (type == "dense") {
        DenseLayer d;
        d.weights = read_tensor(in);
        d.bias = read_tensor(in);
        net.layers.emplace_back(std::move(d));
      } else if (type == "softmax") {
        net.layers.emplace_back(SoftmaxLayer{});
      } else {
        throw ParseError("WTSN: unsupported layer type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("WTSN: ") + e.what());
  }
  validate_net(net);
  return net;
}

}  // namespace corpusforge::tensor
