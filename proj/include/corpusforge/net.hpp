#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "corpusforge/rng.hpp"
#include "corpusforge/tensor.hpp"

namespace corpusforge::tensor {

/// Conv2D when weights are (o,i,h,w), Conv3D when (o,i,t,h,w).
struct ConvLayer {
  Tensor weights;
  Tensor bias;
  std::size_t stride = 1;
  Padding pad = Padding::Same;
  std::size_t stride_t = 1;
  Padding pad_t = Padding::Same;

  bool is_3d() const { return weights.rank() == 5; }
};

struct ReluLayer {};
struct GlobalAvgPoolLayer {};
struct DenseLayer {
  Tensor weights;  // (out, in)
  Tensor bias;     // (out)
};
struct SoftmaxLayer {};

using Layer = std::variant<ConvLayer, ReluLayer, GlobalAvgPoolLayer, DenseLayer, SoftmaxLayer>;

struct NetSpec {
  std::vector<Layer> layers;
};

/// Throws unless shapes chain and the only Dense (if any) is last, or
/// second to last before a Softmax.
void validate_net(const NetSpec& net);

/// Inclusive range of output time steps unaffected by temporal zero padding.
struct TimeRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct ForwardOptions {
  /// Global pooling averages only over time steps whose receptive field lies
  /// inside the input.
  bool pool_valid_time_only = false;
};

struct ForwardResult {
  Tensor output;
  std::optional<TimeRange> valid_time;  // set while the output has a time axis
};

ForwardResult forward(const NetSpec& net, const Tensor& x, const ForwardOptions& opts = {});

std::size_t conv_layer_count(const NetSpec& net);

/// Inflates every Conv2D to Conv3D with temporal extent k, same padding and
/// stride 1 in time. Other layers are kept. Throws on 3D convolutions.
NetSpec inflate_net(const NetSpec& net2d, std::size_t k, bool normalize = true);

struct EquivalenceResult {
  bool ok = false;
  double max_deviation = 0.0;
};

/// Runs net2d on x2d and the inflated net on x2d repeated along time, then
/// compares element-wise. Enough frames are used that the central output
/// time step is free of padding effects; pooling covers valid steps only.
EquivalenceResult inflation_equivalence(const NetSpec& net2d, std::size_t k, const Tensor& x2d, double tol,
                                        bool normalize = true);

/// Replaces the terminal GlobalAvgPool -> Dense with a 1x1(x1) convolution
/// carrying the same weights followed by GlobalAvgPool, so larger inputs
/// produce position-averaged logits.
NetSpec fcn_transform(const NetSpec& net);

struct RandomNetOptions {
  std::size_t in_channels = 3;
  std::size_t conv_layers = 2;
  std::size_t max_width = 4;
  std::size_t classes = 5;
  bool dense_head = true;  // GlobalAvgPool + Dense after the convolutions
  bool relu = true;
};

/// Random BN-free 2D network with Gaussian weights.
NetSpec random_net_2d(Rng& rng, const RandomNetOptions& opts);

Tensor random_tensor(Rng& rng, std::vector<std::size_t> dims, double scale = 1.0, Layout layout = Layout::Generic);

/// Network file: "WTSN", u32 byte length, JSON layer table, then one WTSR
/// record per weight/bias tensor in layer order.
void save_net(const NetSpec& net, const std::filesystem::path& path);
NetSpec load_net(const std::filesystem::path& path);

}  // namespace corpusforge::tensor
