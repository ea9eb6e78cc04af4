#pragma once

// Sequential network with additive skip links, plus the shipped presets.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qcnn/layers.hpp"

namespace qcnn {

template <class T>
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  Shape input_shape() const { return spec_.input_shape(); }
  Shape output_shape() const { return shapes_.empty() ? spec_.input_shape() : shapes_.back().shape; }

  /// Runs every layer on a batch and keeps the activations for backward().
  const Tensor<T>& forward(const Tensor<T>& x);

  /// Backpropagates dL/d(output) of the last forward() call and adds the
  /// parameter gradients. Fills *grad_input when given.
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_input = nullptr);

  /// Forward pass that returns a copy of the output.
  Tensor<T> predict(const Tensor<T>& x) { return forward(x); }

  /// All parameter groups in layer order. Views stay valid for the network's lifetime.
  std::vector<ParamView<T>> params();
  std::int64_t param_count();
  void zero_grad();

 private:
  NetworkSpec spec_;
  std::vector<LayerShape> shapes_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Tensor<T>> acts_;     // acts_[i] is the input of layer i
  std::vector<Tensor<T>> pending_;  // skip-link gradients waiting for acts_[i]
  Tensor<T> grad_a_, grad_b_;
};

// ---------------------------------------------------------------------------
// Presets. In quaternion mode every conv width is scaled by filter_ratio and
// rounded; real presets ignore the ratio.

struct ShallowWidths {
  int conv1 = 32;
  int conv2 = 32;
  int conv3 = 64;
  int conv4 = 64;
  int hidden = 512;
  int classes = 10;
};

/// conv3x3 x2, max-pool 2, conv3x3 x2, max-pool 2, flatten, dense, dense(classes).
/// The quaternion variant flattens quaternion-wise and splits to reals before
/// the final dense layer feeding the softmax.
NetworkSpec preset_shallow_cifar(bool quaternion, double filter_ratio = 1.0, ShallowWidths widths = {});

/// U-shaped encoder/decoder with two average-pool stages, additive skips and a
/// tanh top. Output shape equals the (3, size, size) input.
NetworkSpec preset_denoiser(bool quaternion, double filter_ratio, int width = 32, int size = 128);

/// VGG-S style classifier for 224x224 inputs and 102 classes. Only built for
/// shape and parameter audits.
NetworkSpec preset_vgg_s(bool quaternion, double filter_ratio);

/// Default filter ratio per preset: 1 for shallow-cifar, 1/sqrt(2) otherwise.
double default_filter_ratio(const std::string& preset);

/// "shallow-cifar", "denoiser" or "vgg-s". Throws std::invalid_argument otherwise.
NetworkSpec make_preset(const std::string& name, bool quaternion, double filter_ratio);
bool is_preset(const std::string& name);

/// Sum of count_params_and_mults over the spec.
LayerCost total_cost(const NetworkSpec& spec);
/// Same, restricted to conv and transposed-conv layers.
LayerCost conv_cost(const NetworkSpec& spec);

}  // namespace qcnn
