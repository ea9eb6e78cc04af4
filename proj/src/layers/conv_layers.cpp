#include <algorithm>

#include "engine.hpp"
#include "qcnn/simd.hpp"

namespace qcnn::detail {
namespace {

using simd::Trans;

// conv, conv_transpose, qconv, qconv_transpose. All four run as real GEMMs per
// sample over im2col patches of the (possibly zero-inserted) input. Stride 1
// gathers the patches block by block from a padded copy of the input.
template <class T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out) : Layer<T>(spec, in, out) {
    quaternion_ = spec.kind == LayerKind::qconv || spec.kind == LayerKind::qconv_transpose;
    transpose_ = spec.kind == LayerKind::qconv_transpose || spec.kind == LayerKind::conv_transpose;
    k_ = spec.units;
    c_ = quaternion_ ? in.shape.c / 3 : in.shape.c;
    taps_ = spec.kernel * spec.kernel;
    geom_ = transpose_ ? transpose_geom(in.shape.c, in.shape.h, in.shape.w, spec.kernel, spec.conv_config())
                       : conv_geom(in.shape.c, in.shape.h, in.shape.w, spec.kernel, spec.conv_config());
    rows_ = quaternion_ ? 3 * k_ : k_;
    const std::size_t n = std::size_t(k_) * c_ * taps_;
    if (quaternion_) {
      a_.assign(n, T(0));
      b_.assign(n, T(0));
    } else {
      a_.assign(n, T(0));
      if (spec.bias) b_.assign(std::size_t(k_), T(0));
    }
    ga_.assign(a_.size(), T(0));
    gb_.assign(b_.size(), T(0));
    w_.assign(std::size_t(rows_) * geom_.rows(), T(0));
    gw_.assign(w_.size(), T(0));
    shifted_ = geom_.stride == 1 && geom_.up == 1 && !geom_.trivial() && geom_.pad_t >= 0 && geom_.pad_l >= 0 &&
               geom_.in_h + geom_.pad_t <= geom_.out_h + geom_.kernel - 1 &&
               geom_.in_w + geom_.pad_l <= geom_.out_w + geom_.kernel - 1;
  }

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    refresh();
    const int batch = x.batch();
    ensure_shape(y, this->out_batch(batch));
    const int kc = geom_.rows(), p = geom_.cols();
    for (int n = 0; n < batch; ++n) {
      T* yn = y.sample(n);
      if (shifted_) {
        shifted_forward(x.sample(n), yn);
      } else {
        const T* col = patches(x.sample(n));
        simd::gemm<T>(Trans::no, Trans::no, rows_, p, kc, T(1), w_.data(), kc, col, p, T(0), yn, p);
      }
      if (!quaternion_ && !b_.empty())
        for (int k = 0; k < k_; ++k) std::for_each(yn + std::size_t(k) * p, yn + std::size_t(k + 1) * p, [&](T& v) { v += b_[k]; });
    }
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    this->check_input(x);
    if (!(gy.shape() == this->out_batch(x.batch()))) throw ShapeError("gradient does not match layer output");
    refresh();
    const int batch = x.batch();
    const int kc = geom_.rows(), p = geom_.cols();
    std::fill(gw_.begin(), gw_.end(), T(0));
    if (gx) ensure_shape(*gx, x.shape());
    for (int n = 0; n < batch; ++n) {
      const T* gyn = gy.sample(n);
      if (!quaternion_ && !b_.empty())
        for (int k = 0; k < k_; ++k) {
          T acc = 0;
          for (int i = 0; i < p; ++i) acc += gyn[std::size_t(k) * p + i];
          gb_[k] += acc;
        }
      if (shifted_) {
        shifted_backward(x.sample(n), gyn, gx ? gx->sample(n) : nullptr);
        continue;
      }
      const T* col = patches(x.sample(n));
      simd::gemm<T>(Trans::no, Trans::yes, rows_, kc, p, T(1), gyn, p, col, p, T(1), gw_.data(), kc);
      if (!gx) continue;
      T* gxn = gx->sample(n);
      if (geom_.trivial()) {
        simd::gemm<T>(Trans::yes, Trans::no, kc, p, rows_, T(1), w_.data(), kc, gyn, p, T(0), gxn, p);
      } else {
        gcol_.resize(std::size_t(kc) * p);
        simd::gemm<T>(Trans::yes, Trans::no, kc, p, rows_, T(1), w_.data(), kc, gyn, p, T(0), gcol_.data(), p);
        std::fill(gxn, gxn + x.shape().sample_size(), T(0));
        col2im(geom_, gcol_.data(), gxn);
      }
    }
    reduce();
  }

  std::vector<ParamView<T>> params() override {
    const int fi = c_ * taps_, fo = k_ * taps_;
    if (quaternion_)
      return {{"s", a_, ga_, ParamRole::scale, fi, fo}, {"theta", b_, gb_, ParamRole::angle, fi, fo}};
    std::vector<ParamView<T>> v{{"weight", a_, ga_, ParamRole::weight, fi, fo}};
    if (!b_.empty()) v.push_back({"bias", b_, gb_, ParamRole::bias, fi, fo});
    return v;
  }

 private:
  // Stride-1 path. The input is zero-padded to (out_h + L - 1) x (out_w + L - 1)
  // and outputs are computed on rows of the padded width, the extra L - 1
  // columns per row being discarded. In that layout every patch row is a
  // contiguous run of the padded input, so patches are gathered one block of
  // columns at a time and the block stays in cache for its GEMMs.
  static constexpr int kChunk = 256;

  int padded_w() const { return geom_.out_w + geom_.kernel - 1; }
  std::size_t padded_plane() const { return std::size_t(geom_.out_h + geom_.kernel - 1) * padded_w(); }
  std::size_t tap_offset(int ch, int t) const {
    return ch * padded_plane() + std::size_t(t / geom_.kernel) * padded_w() + t % geom_.kernel;
  }

  void pad_input(const T* x) {
    const std::size_t plane = padded_plane();
    const int wp = padded_w();
    xp_.assign(plane * geom_.channels + geom_.kernel, T(0));
    for (int ch = 0; ch < geom_.channels; ++ch)
      for (int y = 0; y < geom_.in_h; ++y)
        std::copy_n(x + (std::size_t(ch) * geom_.in_h + y) * geom_.in_w, geom_.in_w,
                    xp_.data() + ch * plane + std::size_t(y + geom_.pad_t) * wp + geom_.pad_l);
  }

  void gather_block(int c0, int nc) {
    const int kc = geom_.rows();
    col_.resize(std::size_t(kc) * kChunk);
    for (int ch = 0; ch < geom_.channels; ++ch)
      for (int t = 0; t < taps_; ++t)
        std::copy_n(xp_.data() + tap_offset(ch, t) + c0, nc, col_.data() + std::size_t(ch * taps_ + t) * nc);
  }

  void shifted_forward(const T* x, T* y) {
    pad_input(x);
    const int wp = padded_w(), kc = geom_.rows();
    const int n = geom_.out_h * wp;
    yp_.resize(std::size_t(rows_) * n);
    for (int c0 = 0; c0 < n; c0 += kChunk) {
      const int nc = std::min(kChunk, n - c0);
      gather_block(c0, nc);
      simd::gemm<T>(Trans::no, Trans::no, rows_, nc, kc, T(1), w_.data(), kc, col_.data(), nc, T(0), yp_.data() + c0, n);
    }
    for (int r = 0; r < rows_; ++r)
      for (int oy = 0; oy < geom_.out_h; ++oy)
        std::copy_n(yp_.data() + std::size_t(r) * n + std::size_t(oy) * wp, geom_.out_w,
                    y + (std::size_t(r) * geom_.out_h + oy) * geom_.out_w);
  }

  void shifted_backward(const T* x, const T* gy, T* gx) {
    pad_input(x);
    const int wp = padded_w(), kc = geom_.rows();
    const int n = geom_.out_h * wp;
    gyp_.assign(std::size_t(rows_) * n, T(0));
    for (int r = 0; r < rows_; ++r)
      for (int oy = 0; oy < geom_.out_h; ++oy)
        std::copy_n(gy + (std::size_t(r) * geom_.out_h + oy) * geom_.out_w, geom_.out_w,
                    gyp_.data() + std::size_t(r) * n + std::size_t(oy) * wp);
    if (gx) {
      gxp_.assign(xp_.size(), T(0));
      gcol_.resize(std::size_t(kc) * kChunk);
    }
    for (int c0 = 0; c0 < n; c0 += kChunk) {
      const int nc = std::min(kChunk, n - c0);
      gather_block(c0, nc);
      simd::gemm<T>(Trans::no, Trans::yes, rows_, kc, nc, T(1), gyp_.data() + c0, n, col_.data(), nc, T(1), gw_.data(), kc);
      if (!gx) continue;
      simd::gemm<T>(Trans::yes, Trans::no, kc, nc, rows_, T(1), w_.data(), kc, gyp_.data() + c0, n, T(0), gcol_.data(), nc);
      for (int ch = 0; ch < geom_.channels; ++ch)
        for (int t = 0; t < taps_; ++t)
          simd::axpy<T>(std::size_t(nc), T(1), gcol_.data() + std::size_t(ch * taps_ + t) * nc, gxp_.data() + tap_offset(ch, t) + c0);
    }
    if (!gx) return;
    const std::size_t plane = padded_plane();
    for (int ch = 0; ch < geom_.channels; ++ch)
      for (int y = 0; y < geom_.in_h; ++y) {
        const T* src = gxp_.data() + ch * plane + std::size_t(y + geom_.pad_t) * wp + geom_.pad_l;
        std::copy_n(src, geom_.in_w, gx + (std::size_t(ch) * geom_.in_h + y) * geom_.in_w);
      }
  }

  const T* patches(const T* x) {
    if (geom_.trivial()) return x;
    col_.resize(std::size_t(geom_.rows()) * geom_.cols());
    im2col(geom_, x, col_.data());
    return col_.data();
  }

  void refresh() {
    if (quaternion_) {
      expand_quaternion(k_, c_, taps_, transpose_, a_.data(), b_.data(), w_.data());
    } else if (!transpose_) {
      std::copy(a_.begin(), a_.end(), w_.begin());
    } else {
      for (std::size_t r = 0; r < std::size_t(k_) * c_; ++r)
        for (int t = 0; t < taps_; ++t) w_[r * taps_ + (taps_ - 1 - t)] = a_[r * taps_ + t];
    }
  }

  void reduce() {
    if (quaternion_) {
      reduce_quaternion(k_, c_, taps_, transpose_, a_.data(), b_.data(), gw_.data(), ga_.data(), gb_.data());
    } else if (!transpose_) {
      for (std::size_t i = 0; i < ga_.size(); ++i) ga_[i] += gw_[i];
    } else {
      for (std::size_t r = 0; r < std::size_t(k_) * c_; ++r)
        for (int t = 0; t < taps_; ++t) ga_[r * taps_ + t] += gw_[r * taps_ + (taps_ - 1 - t)];
    }
  }

  bool quaternion_ = false;
  bool transpose_ = false;
  bool shifted_ = false;
  int k_ = 0, c_ = 0, taps_ = 1, rows_ = 0;
  ConvGeom geom_;
  // quaternion: a = s, b = theta; real: a = weight, b = bias
  std::vector<T> a_, b_, ga_, gb_;
  std::vector<T> w_, gw_, col_, gcol_;
  std::vector<T> xp_, yp_, gyp_, gxp_;  // stride-1 path
};

// dense and qdense: y = x W^T over the whole batch.
template <class T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out) : Layer<T>(spec, in, out) {
    quaternion_ = spec.kind == LayerKind::qdense;
    m_ = spec.units;
    n_ = quaternion_ ? in.shape.c / 3 : in.shape.c;
    rows_ = out.shape.c;
    cols_ = in.shape.c;
    a_.assign(std::size_t(m_) * n_, T(0));
    if (quaternion_) b_.assign(a_.size(), T(0));
    else if (spec.bias) b_.assign(std::size_t(m_), T(0));
    ga_.assign(a_.size(), T(0));
    gb_.assign(b_.size(), T(0));
    if (quaternion_) {
      w_.assign(std::size_t(rows_) * cols_, T(0));
      gw_.assign(w_.size(), T(0));
    }
  }

  void forward(const Tensor<T>& x, Tensor<T>& y) override {
    this->check_input(x);
    const int batch = x.batch();
    ensure_shape(y, this->out_batch(batch));
    const T* w = weights();
    simd::gemm<T>(Trans::no, Trans::yes, batch, rows_, cols_, T(1), x.data(), cols_, w, cols_, T(0), y.data(), rows_);
    if (!quaternion_ && !b_.empty())
      for (int n = 0; n < batch; ++n)
        for (int m = 0; m < m_; ++m) y.data()[std::size_t(n) * rows_ + m] += b_[m];
  }

  void backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, Tensor<T>* gx) override {
    this->check_input(x);
    if (!(gy.shape() == this->out_batch(x.batch()))) throw ShapeError("gradient does not match layer output");
    const int batch = x.batch();
    const T* w = weights();
    T* gw = quaternion_ ? gw_.data() : ga_.data();
    if (quaternion_) std::fill(gw_.begin(), gw_.end(), T(0));
    simd::gemm<T>(Trans::yes, Trans::no, rows_, cols_, batch, T(1), gy.data(), rows_, x.data(), cols_, T(1), gw, cols_);
    if (quaternion_) reduce_quaternion(m_, n_, 1, false, a_.data(), b_.data(), gw_.data(), ga_.data(), gb_.data());
    else if (!b_.empty())
      for (int n = 0; n < batch; ++n)
        for (int m = 0; m < m_; ++m) gb_[m] += gy.data()[std::size_t(n) * rows_ + m];
    if (gx) {
      ensure_shape(*gx, x.shape());
      simd::gemm<T>(Trans::no, Trans::no, batch, cols_, rows_, T(1), gy.data(), rows_, w, cols_, T(0), gx->data(), cols_);
    }
  }

  std::vector<ParamView<T>> params() override {
    if (quaternion_)
      return {{"s", a_, ga_, ParamRole::scale, n_, m_}, {"theta", b_, gb_, ParamRole::angle, n_, m_}};
    std::vector<ParamView<T>> v{{"weight", a_, ga_, ParamRole::weight, n_, m_}};
    if (!b_.empty()) v.push_back({"bias", b_, gb_, ParamRole::bias, n_, m_});
    return v;
  }

 private:
  const T* weights() {
    if (!quaternion_) return a_.data();
    expand_quaternion(m_, n_, 1, false, a_.data(), b_.data(), w_.data());
    return w_.data();
  }

  bool quaternion_ = false;
  int m_ = 0, n_ = 0, rows_ = 0, cols_ = 0;
  std::vector<T> a_, b_, ga_, gb_, w_, gw_;
};

}  // namespace

template <class T>
std::unique_ptr<Layer<T>> make_conv_layer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out) {
  switch (spec.kind) {
    case LayerKind::qconv:
    case LayerKind::qconv_transpose:
    case LayerKind::conv:
    case LayerKind::conv_transpose:
      return std::make_unique<ConvLayer<T>>(spec, in, out);
    case LayerKind::qdense:
    case LayerKind::dense:
      return std::make_unique<DenseLayer<T>>(spec, in, out);
    default:
      return nullptr;
  }
}

template std::unique_ptr<Layer<float>> make_conv_layer<float>(const LayerSpec&, const LayerShape&, const LayerShape&);
template std::unique_ptr<Layer<double>> make_conv_layer<double>(const LayerSpec&, const LayerShape&, const LayerShape&);

}  // namespace qcnn::detail
