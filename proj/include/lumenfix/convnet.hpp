#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumenfix/image.hpp"

namespace lumenfix::net {

/// Dense C x H x W feature map, channel-major ([c][y][x]).
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(int c, int h, int w)
      : channels(c), height(h), width(w), values(static_cast<size_t>(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  size_t size() const { return values.size(); }
};

struct ConvWeights {
  int c_out = 0, c_in = 0, kernel = 0;
  std::vector<double> w;     // [c_out][c_in][k][k]
  std::vector<double> bias;  // size c_out, or empty for no bias

  double at(int co, int ci, int u, int v) const {
    return w[((static_cast<size_t>(co) * c_in + ci) * kernel + u) * kernel + v];
  }
};

struct DepthwiseWeights {
  int channels = 0, kernel = 0;
  std::vector<double> w;  // [c][k][k]

  double at(int c, int u, int v) const {
    return w[(static_cast<size_t>(c) * kernel + u) * kernel + v];
  }
};

struct PointwiseWeights {
  int c_out = 0, c_in = 0;
  std::vector<double> w;  // [c_out][c_in]

  double at(int co, int ci) const { return w[static_cast<size_t>(co) * c_in + ci]; }
};

/// Cross-correlation with zero padding floor(K/2); "same" output at stride 1.
Tensor3 conv2d(const Tensor3& x, const ConvWeights& wts, int stride);

/// Per-channel spatial filter followed by a 1x1 channel mix.
Tensor3 depthwise_separable(const Tensor3& x, const DepthwiseWeights& dw,
                            const PointwiseWeights& pw, int stride);

enum class LayerKind : uint8_t {
  standard_conv = 0,
  depthwise_separable = 1,
  relu = 2,
  global_avg_pool = 3,
  dense = 4,
  softmax = 5,
};

struct LayerSpec {
  LayerKind kind;
  int c_in = 0, c_out = 0, kernel = 0, stride = 1;  // conv kinds
  int f_in = 0, f_out = 0;                          // dense

  static LayerSpec standard_conv(int c_in, int c_out, int k, int stride);
  static LayerSpec depthwise_separable(int c_in, int c_out, int k, int stride);
  static LayerSpec relu();
  static LayerSpec global_avg_pool();
  static LayerSpec dense(int f_in, int f_out);
  static LayerSpec softmax();
};

struct NetSpec {
  std::vector<LayerSpec> layers;

  /// First convolutional layer standard, softmax only at the end, shapes chained.
  void validate() const;

  /// The desk-scale default: conv 3->8, two separable blocks to 32 channels,
  /// pooled features, dense head.
  static NetSpec desk_default(int num_classes);

  /// Same channel plan with every separable block replaced by a standard conv.
  static NetSpec all_standard_variant(const NetSpec& spec);
};

long param_count(const NetSpec& spec);

/// A trainable network owning its parameters. Forward is pure; train_step
/// mutates only the owned parameter store.
class Network {
 public:
  Network(NetSpec spec, uint64_t seed);

  const NetSpec& spec() const { return spec_; }
  long param_count() const { return net::param_count(spec_); }

  /// Softmax probabilities: entries > 0, summing to 1.
  std::vector<double> forward(const Tensor3& x) const;

  /// Pooled feature vector (the global_avg_pool output).
  std::vector<double> features(const Tensor3& x) const;

  /// One SGD step on the mean cross-entropy of the batch; returns the loss.
  /// Gradients are exact for the forward definition; a non-finite loss
  /// aborts the step without touching parameters.
  double train_step(const std::vector<Tensor3>& batch, const std::vector<int>& labels, double lr);

  void save(const std::string& path) const;
  static Network load(const std::string& path);

  /// Flat parameter access, layer order; used by the gradient checks.
  std::vector<double*> parameter_view();

 private:
  struct LayerParams {
    std::vector<double> w;   // conv / depthwise / dense weights
    std::vector<double> w2;  // pointwise weights of separable blocks
    std::vector<double> b;   // dense bias
  };

  struct Trace;  // per-layer activations for backprop

  Tensor3 run(const Tensor3& x, Trace* trace) const;
  void backward(const Trace& trace, const std::vector<double>& logit_grad,
                std::vector<LayerParams>& grads) const;

  NetSpec spec_;
  std::vector<LayerParams> params_;
};

}  // namespace lumenfix::net
