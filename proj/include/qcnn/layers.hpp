#pragma once

// Layer engine. Every layer is stateless apart from its parameters: forward
// reads a batch x (N, C, H, W) and writes y; backward gets x, y and dL/dy back
// from the caller and accumulates parameter gradients. The Network keeps the
// activations, so nothing is cached inside layers.
//
// Quaternion conv/dense layers expand their (s, theta) pairs into a real
// block-circulant weight matrix and run the same GEMM path as the real layers.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qcnn/layer_spec.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn {

enum class ParamRole { weight, scale, angle, bias };

template <class T>
struct ParamView {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
  ParamRole role = ParamRole::weight;
  int fan_in = 0;   // for normalized initialization
  int fan_out = 0;
};

template <class T>
class Layer {
 public:
  Layer(LayerSpec spec, LayerShape in, LayerShape out) : spec_(spec), in_(in), out_(out) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const LayerSpec& spec() const { return spec_; }
  LayerKind kind() const { return spec_.kind; }
  const LayerShape& input() const { return in_; }
  const LayerShape& output() const { return out_; }

  /// y is resized to (N, out) if needed and fully overwritten.
  virtual void forward(const Tensor<T>& x, Tensor<T>& y) = 0;

  /// Adds this batch's parameter gradients to the grad buffers. Writes dL/dx
  /// into *gx (resized as needed) unless gx is null.
  virtual void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, Tensor<T>* gx) = 0;

  virtual std::vector<ParamView<T>> params() { return {}; }

  void zero_grad();
  Tensor<T> forward(const Tensor<T>& x);

 protected:
  void check_input(const Tensor<T>& x) const;
  Shape out_batch(int n) const { return out_.shape.with_batch(n); }

  LayerSpec spec_;
  LayerShape in_;
  LayerShape out_;
};

/// Builds a layer with zero-valued parameters. skip_add is a pass-through;
/// the Network adds the linked activation.
template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const LayerShape& in);

// ---------------------------------------------------------------------------
// Single-sample functional API over the same engine.

template <class T>
struct QConvKernel {
  int out_channels = 0;  // K
  int in_channels = 0;   // C
  int size = 0;          // L
  std::vector<T> s;      // (K, C, L, L)
  std::vector<T> theta;  // (K, C, L, L), radians

  QConvKernel() = default;
  QConvKernel(int k, int c, int l)
      : out_channels(k), in_channels(c), size(l), s(std::size_t(k) * c * l * l), theta(s.size()) {}
  std::size_t index(int k, int c, int ky, int kx) const {
    return ((std::size_t(k) * in_channels + c) * size + ky) * size + kx;
  }
  std::int64_t param_count() const { return std::int64_t(s.size() + theta.size()); }
};

template <class T>
struct QDenseKernel {
  int out_size = 0;      // M
  int in_size = 0;       // N
  std::vector<T> s;      // (M, N)
  std::vector<T> theta;  // (M, N)

  QDenseKernel() = default;
  QDenseKernel(int m, int n) : out_size(m), in_size(n), s(std::size_t(m) * n), theta(s.size()) {}
};

template <class T>
struct LayerGradients {
  Tensor<T> grad_input;
  std::vector<std::vector<T>> grad_params;  // in params() order, e.g. {s, theta}
};

template <class T>
QFeatureMap<T> qconv2d_forward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg);
template <class T>
LayerGradients<T> qconv2d_backward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg,
                                   const QFeatureMap<T>& grad_out);

/// Zero insertion by the stride, zero padding, then qconv2d with the spatially
/// flipped kernel. Output is (H-1)*stride + L (valid) or H*stride (same).
template <class T>
QFeatureMap<T> qconv_transpose2d_forward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg);
template <class T>
LayerGradients<T> qconv_transpose2d_backward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg,
                                             const QFeatureMap<T>& grad_out);

template <class T>
QVector<T> qdense_forward(const QVector<T>& x, const QDenseKernel<T>& k);
template <class T>
LayerGradients<T> qdense_backward(const QVector<T>& x, const QDenseKernel<T>& k, const QVector<T>& grad_out);

template <class T>
struct PoolResult {
  QFeatureMap<T> out;
  std::vector<int> routing;  // per output value: flat input index of the max
};

/// Per-part window max, stride == window. Ties go to the first element in
/// row-major order.
template <class T>
PoolResult<T> qmaxpool2d(const QFeatureMap<T>& x, int window = 2);
template <class T>
QFeatureMap<T> qmaxpool2d_backward(const QFeatureMap<T>& x, const PoolResult<T>& fwd, const QFeatureMap<T>& grad_out);

template <class T>
QFeatureMap<T> qavgpool2d(const QFeatureMap<T>& x, int window = 2);
template <class T>
QFeatureMap<T> qavgpool2d_backward(const QFeatureMap<T>& x, const QFeatureMap<T>& grad_out, int window = 2);

template <class T>
QFeatureMap<T> qrelu(const QFeatureMap<T>& x);
template <class T>
QFeatureMap<T> qrelu_backward(const QFeatureMap<T>& x, const QFeatureMap<T>& grad_out);

/// Real conv on a (1, C, H, W) map; weights (K, C, L, L), optional bias (K).
template <class T>
Tensor<T> real_conv2d(const Tensor<T>& x, const Tensor<T>& weights, std::span<const T> bias, ConvConfig cfg);
template <class T>
LayerGradients<T> real_conv2d_backward(const Tensor<T>& x, const Tensor<T>& weights, std::span<const T> bias,
                                       ConvConfig cfg, const Tensor<T>& grad_out);

/// y = W x (+ b) with W (M, N).
template <class T>
std::vector<T> real_dense(std::span<const T> x, std::span<const T> weights, int out_size, std::span<const T> bias);

template <class T>
Tensor<T> real_relu(const Tensor<T>& x);
template <class T>
Tensor<T> tanh_activation(const Tensor<T>& x);

/// Max-shifted softmax.
template <class T>
std::vector<T> softmax_head(std::span<const T> logits);

}  // namespace qcnn
