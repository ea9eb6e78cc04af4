#include <algorithm>
#include <cmath>

#include "engine.hpp"
#include "qcnn/simd.hpp"

namespace qcnn::detail {
namespace {

// Max and average pooling over k x k windows with stride k, applied to every
// real channel plane. For quaternion maps that is the per-part rule.
template <class T>
class PoolLayer final : public Layer<T> {
 public:
  PoolLayer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out, bool max)
      : Layer<T>(spec, in, out), max_(max) {}

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, this->out_batch(x.batch()));
    const int k = this->spec_.kernel, ih = this->in_.shape.h, iw = this->in_.shape.w;
    const int oh = ih / k, ow = iw / k;
    const std::size_t planes = std::size_t(x.batch()) * x.channels();
    const T inv = T(1) / T(k * k);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const T* xp = x.data() + pl * ih * iw;
      T* yp = y.data() + pl * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          if (max_) {
            yp[oy * ow + ox] = xp[argmax(xp, iw, oy * k, ox * k, k)];
          } else {
            T acc = 0;
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) acc += xp[(oy * k + dy) * iw + ox * k + dx];
            yp[oy * ow + ox] = acc * inv;
          }
        }
    }
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    gx->fill(T(0));
    const int k = this->spec_.kernel, ih = this->in_.shape.h, iw = this->in_.shape.w;
    const int oh = ih / k, ow = iw / k;
    const std::size_t planes = std::size_t(x.batch()) * x.channels();
    const T inv = T(1) / T(k * k);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const T* xp = x.data() + pl * ih * iw;
      const T* gp = gy.data() + pl * oh * ow;
      T* gxp = gx->data() + pl * ih * iw;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T g = gp[oy * ow + ox];
          if (max_) {
            gxp[argmax(xp, iw, oy * k, ox * k, k)] += g;
          } else {
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) gxp[(oy * k + dy) * iw + ox * k + dx] += g * inv;
          }
        }
    }
  }

  // First maximum in row-major order wins.
  static int argmax(const T* xp, int iw, int y0, int x0, int k) {
    int best = y0 * iw + x0;
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        const int i = (y0 + dy) * iw + x0 + dx;
        if (xp[i] > xp[best]) best = i;
      }
    return best;
  }

 private:
  bool max_;
};

template <class T>
class UpsampleLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, this->out_batch(x.batch()));
    const int k = this->spec_.kernel, ih = this->in_.shape.h, iw = this->in_.shape.w, ow = iw * k;
    const std::size_t planes = std::size_t(x.batch()) * x.channels();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const T* xp = x.data() + pl * ih * iw;
      T* yp = y.data() + pl * ih * iw * k * k;
      for (int oy = 0; oy < ih * k; ++oy)
        for (int ox = 0; ox < ow; ++ox) yp[oy * ow + ox] = xp[(oy / k) * iw + ox / k];
    }
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    gx->fill(T(0));
    const int k = this->spec_.kernel, ih = this->in_.shape.h, iw = this->in_.shape.w, ow = iw * k;
    const std::size_t planes = std::size_t(x.batch()) * x.channels();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      T* gxp = gx->data() + pl * ih * iw;
      const T* gp = gy.data() + pl * ih * iw * k * k;
      for (int oy = 0; oy < ih * k; ++oy)
        for (int ox = 0; ox < ow; ++ox) gxp[(oy / k) * iw + ox / k] += gp[oy * ow + ox];
    }
  }
};

template <class T>
class ReluLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, x.shape());
    simd::relu_forward<T>(x.size(), x.data(), y.data());
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    simd::relu_backward<T>(x.size(), x.data(), gy.data(), gx->data());
  }
};

template <class T>
class TanhLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, x.shape());
    std::transform(x.data(), x.data() + x.size(), y.data(), [](T v) { return std::tanh(v); });
  }

  void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) (*gx)[i] = gy[i] * (T(1) - y[i] * y[i]);
  }
};

// flatten, split and skip_add: values pass through unchanged, only the
// per-sample shape label changes.
template <class T>
class CopyLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, this->out_batch(x.batch()));
    std::copy(x.data(), x.data() + x.size(), y.data());
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    std::copy(gy.data(), gy.data() + gy.size(), gx->data());
  }
};

// (3C, H, W) planes -> vector ordered (c, y, x, part).
template <class T>
class FlattenQuaternionLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    ensure_shape(y, this->out_batch(x.batch()));
    to_flat(x, y);
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    if (!gx) return;
    ensure_shape(*gx, x.shape());
    to_planar(*gx, gy);
  }

 private:
  void to_flat(const Tensor<T>& planar, Tensor<T>& flat) const {
    const int c = this->in_.shape.c / 3;
    const std::size_t hw = this->in_.shape.plane(), per = this->in_.shape.sample_size();
    for (int n = 0; n < planar.batch(); ++n) {
      const T* src = planar.sample(n);
      T* dst = flat.data() + n * per;
      for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i)
          for (int p = 0; p < 3; ++p) dst[(ch * hw + i) * 3 + p] = src[(3 * ch + p) * hw + i];
    }
  }
  void to_planar(Tensor<T>& planar, const Tensor<T>& flat) const {
    const int c = this->in_.shape.c / 3;
    const std::size_t hw = this->in_.shape.plane(), per = this->in_.shape.sample_size();
    for (int n = 0; n < planar.batch(); ++n) {
      T* dst = planar.sample(n);
      const T* src = flat.data() + n * per;
      for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i)
          for (int p = 0; p < 3; ++p) dst[(3 * ch + p) * hw + i] = src[(ch * hw + i) * 3 + p];
    }
  }
};

}  // namespace

template <class T>
std::unique_ptr<Layer<T>> make_simple_layer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out) {
  switch (spec.kind) {
    case LayerKind::qmax_pool:
    case LayerKind::max_pool:
      return std::make_unique<PoolLayer<T>>(spec, in, out, true);
    case LayerKind::qavg_pool:
    case LayerKind::avg_pool:
      return std::make_unique<PoolLayer<T>>(spec, in, out, false);
    case LayerKind::upsample:
      return std::make_unique<UpsampleLayer<T>>(spec, in, out);
    case LayerKind::qrelu:
    case LayerKind::relu:
      return std::make_unique<ReluLayer<T>>(spec, in, out);
    case LayerKind::tanh:
      return std::make_unique<TanhLayer<T>>(spec, in, out);
    case LayerKind::flatten:
    case LayerKind::split:
    case LayerKind::skip_add:
      return std::make_unique<CopyLayer<T>>(spec, in, out);
    case LayerKind::flatten_quaternion:
      return std::make_unique<FlattenQuaternionLayer<T>>(spec, in, out);
    default:
      return nullptr;
  }
}

template std::unique_ptr<Layer<float>> make_simple_layer<float>(const LayerSpec&, const LayerShape&, const LayerShape&);
template std::unique_ptr<Layer<double>> make_simple_layer<double>(const LayerSpec&, const LayerShape&, const LayerShape&);

}  // namespace qcnn::detail
