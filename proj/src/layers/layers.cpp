#include "qcnn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "engine.hpp"

namespace qcnn {

template <class T>
void Layer<T>::zero_grad() {
  for (auto& p : params()) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <class T>
Tensor<T> Layer<T>::forward(const Tensor<T>& x) {
  Tensor<T> y;
  forward(x, y);
  return y;
}

template <class T>
void Layer<T>::check_input(const Tensor<T>& x) const {
  const Shape& s = in_.shape;
  if (x.channels() != s.c || x.height() != s.h || x.width() != s.w || x.batch() < 1)
    throw ShapeError(std::string(kind_name(spec_.kind)) + " expects per-sample input " + to_string(s) + ", got " +
                     to_string(x.shape()));
}

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const LayerShape& in) {
  const LayerShape out = infer_layer_shape(spec, in);
  if (auto l = detail::make_conv_layer<T>(spec, in, out)) return l;
  if (auto l = detail::make_simple_layer<T>(spec, in, out)) return l;
  throw ShapeError("no implementation for layer kind " + std::string(kind_name(spec.kind)));
}

namespace {

template <class T>
struct SingleRun {
  std::unique_ptr<Layer<T>> layer;

  SingleRun(const LayerSpec& spec, const Shape& in, Domain domain, const std::vector<const std::vector<T>*>& values)
      : layer(make_layer<T>(spec, {in.with_batch(1), domain})) {
    auto ps = layer->params();
    if (ps.size() != values.size()) throw ShapeError("parameter group count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps[i].value.size() != values[i]->size())
        throw ShapeError("parameter '" + ps[i].name + "' has " + std::to_string(values[i]->size()) +
                         " values, expected " + std::to_string(ps[i].value.size()));
      std::copy(values[i]->begin(), values[i]->end(), ps[i].value.begin());
    }
  }

  LayerGradients<T> backward(const Tensor<T>& x, const Tensor<T>& gy) {
    const Tensor<T> y = layer->forward(x);
    if (!(gy.shape() == y.shape())) throw ShapeError("gradient shape " + to_string(gy.shape()) + " does not match output " + to_string(y.shape()));
    layer->zero_grad();
    LayerGradients<T> g;
    layer->backward(x, y, gy, &g.grad_input);
    for (auto& p : layer->params()) g.grad_params.emplace_back(p.grad.begin(), p.grad.end());
    return g;
  }
};

template <class T>
LayerSpec qconv_spec(LayerKind kind, const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg) {
  if (k.in_channels != x.channels())
    throw ShapeError("kernel expects " + std::to_string(k.in_channels) + " input channels, map has " +
                     std::to_string(x.channels()));
  if (k.size < 1 || k.out_channels < 1) throw ShapeError("empty quaternion kernel");
  if (k.s.size() != k.theta.size()) throw ShapeError("s and theta differ in size");
  LayerSpec spec;
  spec.kind = kind;
  spec.units = k.out_channels;
  spec.kernel = k.size;
  spec.stride = cfg.stride;
  spec.padding = cfg.padding;
  return spec;
}

template <class T>
QFeatureMap<T> as_map(Tensor<T> t) {
  return QFeatureMap<T>::from_tensor(std::move(t));
}

template <class T>
LayerSpec qdense_spec(const QVector<T>& x, const QDenseKernel<T>& k) {
  if (k.in_size != x.size()) throw ShapeError("quaternion dense kernel length does not match input");
  LayerSpec spec;
  spec.kind = LayerKind::qdense;
  spec.units = k.out_size;
  return spec;
}

template <class T>
QFeatureMap<T> map_op(LayerKind kind, int window, const QFeatureMap<T>& x) {
  LayerSpec spec;
  spec.kind = kind;
  spec.kernel = window;
  SingleRun<T> run(spec, x.tensor().shape(), Domain::quaternion, {});
  return as_map(run.layer->forward(x.tensor()));
}

template <class T>
QFeatureMap<T> map_op_backward(LayerKind kind, int window, const QFeatureMap<T>& x, const QFeatureMap<T>& gy) {
  LayerSpec spec;
  spec.kind = kind;
  spec.kernel = window;
  SingleRun<T> run(spec, x.tensor().shape(), Domain::quaternion, {});
  return as_map(run.backward(x.tensor(), gy.tensor()).grad_input);
}

}  // namespace

template <class T>
QFeatureMap<T> qconv2d_forward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg) {
  SingleRun<T> run(qconv_spec(LayerKind::qconv, x, k, cfg), x.tensor().shape(), Domain::quaternion, {&k.s, &k.theta});
  return as_map(run.layer->forward(x.tensor()));
}

template <class T>
LayerGradients<T> qconv2d_backward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg,
                                   const QFeatureMap<T>& grad_out) {
  SingleRun<T> run(qconv_spec(LayerKind::qconv, x, k, cfg), x.tensor().shape(), Domain::quaternion, {&k.s, &k.theta});
  return run.backward(x.tensor(), grad_out.tensor());
}

template <class T>
QFeatureMap<T> qconv_transpose2d_forward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg) {
  SingleRun<T> run(qconv_spec(LayerKind::qconv_transpose, x, k, cfg), x.tensor().shape(), Domain::quaternion,
                   {&k.s, &k.theta});
  return as_map(run.layer->forward(x.tensor()));
}

template <class T>
LayerGradients<T> qconv_transpose2d_backward(const QFeatureMap<T>& x, const QConvKernel<T>& k, ConvConfig cfg,
                                             const QFeatureMap<T>& grad_out) {
  SingleRun<T> run(qconv_spec(LayerKind::qconv_transpose, x, k, cfg), x.tensor().shape(), Domain::quaternion,
                   {&k.s, &k.theta});
  return run.backward(x.tensor(), grad_out.tensor());
}

template <class T>
QVector<T> qdense_forward(const QVector<T>& x, const QDenseKernel<T>& k) {
  SingleRun<T> run(qdense_spec(x, k), x.tensor().shape(), Domain::quaternion, {&k.s, &k.theta});
  return QVector<T>::from_tensor(run.layer->forward(x.tensor()));
}

template <class T>
LayerGradients<T> qdense_backward(const QVector<T>& x, const QDenseKernel<T>& k, const QVector<T>& grad_out) {
  SingleRun<T> run(qdense_spec(x, k), x.tensor().shape(), Domain::quaternion, {&k.s, &k.theta});
  return run.backward(x.tensor(), grad_out.tensor());
}

template <class T>
PoolResult<T> qmaxpool2d(const QFeatureMap<T>& x, int window) {
  PoolResult<T> r;
  r.out = map_op(LayerKind::qmax_pool, window, x);
  const int h = x.height(), w = x.width(), oh = h / window, ow = w / window;
  const T* xp = x.tensor().data();
  r.routing.reserve(r.out.tensor().size());
  for (int c = 0; c < 3 * x.channels(); ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        int best = (c * h + oy * window) * w + ox * window;
        for (int dy = 0; dy < window; ++dy)
          for (int dx = 0; dx < window; ++dx) {
            const int i = (c * h + oy * window + dy) * w + ox * window + dx;
            if (xp[i] > xp[best]) best = i;
          }
        r.routing.push_back(best);
      }
  return r;
}

template <class T>
QFeatureMap<T> qmaxpool2d_backward(const QFeatureMap<T>& x, const PoolResult<T>& fwd, const QFeatureMap<T>& grad_out) {
  if (!(grad_out.tensor().shape() == fwd.out.tensor().shape()) || fwd.routing.size() != grad_out.tensor().size())
    throw ShapeError("max-pool gradient does not match the forward result");
  QFeatureMap<T> gx(x.channels(), x.height(), x.width());
  for (std::size_t i = 0; i < fwd.routing.size(); ++i) gx.tensor()[std::size_t(fwd.routing[i])] += grad_out.tensor()[i];
  return gx;
}

template <class T>
QFeatureMap<T> qavgpool2d(const QFeatureMap<T>& x, int window) {
  return map_op(LayerKind::qavg_pool, window, x);
}

template <class T>
QFeatureMap<T> qavgpool2d_backward(const QFeatureMap<T>& x, const QFeatureMap<T>& grad_out, int window) {
  return map_op_backward(LayerKind::qavg_pool, window, x, grad_out);
}

template <class T>
QFeatureMap<T> qrelu(const QFeatureMap<T>& x) {
  return map_op(LayerKind::qrelu, 1, x);
}

template <class T>
QFeatureMap<T> qrelu_backward(const QFeatureMap<T>& x, const QFeatureMap<T>& grad_out) {
  return map_op_backward(LayerKind::qrelu, 1, x, grad_out);
}

namespace {

template <class T>
LayerSpec real_conv_spec(const Tensor<T>& x, const Tensor<T>& weights, std::span<const T> bias, ConvConfig cfg) {
  const Shape& ws = weights.shape();
  if (ws.c != x.channels() || ws.h != ws.w) throw ShapeError("conv weights must be (K, C, L, L) with C = input channels");
  if (!bias.empty() && int(bias.size()) != ws.n) throw ShapeError("bias length must equal output channels");
  LayerSpec spec;
  spec.kind = LayerKind::conv;
  spec.units = ws.n;
  spec.kernel = ws.h;
  spec.stride = cfg.stride;
  spec.padding = cfg.padding;
  spec.bias = !bias.empty();
  return spec;
}

}  // namespace

template <class T>
Tensor<T> real_conv2d(const Tensor<T>& x, const Tensor<T>& weights, std::span<const T> bias, ConvConfig cfg) {
  const std::vector<T> b(bias.begin(), bias.end());
  std::vector<const std::vector<T>*> values{&weights.storage()};
  if (!b.empty()) values.push_back(&b);
  SingleRun<T> run(real_conv_spec(x, weights, bias, cfg), x.shape(), Domain::real, values);
  return run.layer->forward(x);
}

template <class T>
LayerGradients<T> real_conv2d_backward(const Tensor<T>& x, const Tensor<T>& weights, std::span<const T> bias,
                                       ConvConfig cfg, const Tensor<T>& grad_out) {
  const std::vector<T> b(bias.begin(), bias.end());
  std::vector<const std::vector<T>*> values{&weights.storage()};
  if (!b.empty()) values.push_back(&b);
  SingleRun<T> run(real_conv_spec(x, weights, bias, cfg), x.shape(), Domain::real, values);
  return run.backward(x, grad_out);
}

template <class T>
std::vector<T> real_dense(std::span<const T> x, std::span<const T> weights, int out_size, std::span<const T> bias) {
  if (out_size < 1 || weights.size() != x.size() * std::size_t(out_size))
    throw ShapeError("dense weights must be out_size x input length");
  if (!bias.empty() && int(bias.size()) != out_size) throw ShapeError("bias length must equal out_size");
  std::vector<T> y(static_cast<std::size_t>(out_size));
  for (int m = 0; m < out_size; ++m) {
    T acc = bias.empty() ? T(0) : bias[m];
    for (std::size_t i = 0; i < x.size(); ++i) acc += weights[std::size_t(m) * x.size() + i] * x[i];
    y[m] = acc;
  }
  return y;
}

template <class T>
Tensor<T> real_relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <class T>
Tensor<T> tanh_activation(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

template <class T>
std::vector<T> softmax_head(std::span<const T> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (T& v : p) v /= sum;
  return p;
}

#define QCNN_INSTANTIATE(T)                                                                                          \
  template class Layer<T>;                                                                                           \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&, const LayerShape&);                            \
  template QFeatureMap<T> qconv2d_forward<T>(const QFeatureMap<T>&, const QConvKernel<T>&, ConvConfig);             \
  template LayerGradients<T> qconv2d_backward<T>(const QFeatureMap<T>&, const QConvKernel<T>&, ConvConfig,          \
                                                 const QFeatureMap<T>&);                                             \
  template QFeatureMap<T> qconv_transpose2d_forward<T>(const QFeatureMap<T>&, const QConvKernel<T>&, ConvConfig);   \
  template LayerGradients<T> qconv_transpose2d_backward<T>(const QFeatureMap<T>&, const QConvKernel<T>&, ConvConfig, \
                                                           const QFeatureMap<T>&);                                   \
  template QVector<T> qdense_forward<T>(const QVector<T>&, const QDenseKernel<T>&);                                  \
  template LayerGradients<T> qdense_backward<T>(const QVector<T>&, const QDenseKernel<T>&, const QVector<T>&);      \
  template PoolResult<T> qmaxpool2d<T>(const QFeatureMap<T>&, int);                                                  \
  template QFeatureMap<T> qmaxpool2d_backward<T>(const QFeatureMap<T>&, const PoolResult<T>&, const QFeatureMap<T>&); \
  template QFeatureMap<T> qavgpool2d<T>(const QFeatureMap<T>&, int);                                                 \
  template QFeatureMap<T> qavgpool2d_backward<T>(const QFeatureMap<T>&, const QFeatureMap<T>&, int);                 \
  template QFeatureMap<T> qrelu<T>(const QFeatureMap<T>&);                                                           \
  template QFeatureMap<T> qrelu_backward<T>(const QFeatureMap<T>&, const QFeatureMap<T>&);                           \
  template Tensor<T> real_conv2d<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>, ConvConfig);             \
  template LayerGradients<T> real_conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>,        \
                                                     ConvConfig, const Tensor<T>&);                                  \
  template std::vector<T> real_dense<T>(std::span<const T>, std::span<const T>, int, std::span<const T>);           \
  template Tensor<T> real_relu<T>(const Tensor<T>&);                                                                 \
  template Tensor<T> tanh_activation<T>(const Tensor<T>&);                                                           \
  template std::vector<T> softmax_head<T>(std::span<const T>);

QCNN_INSTANTIATE(float)
QCNN_INSTANTIATE(double)
#undef QCNN_INSTANTIATE

}  // namespace qcnn
