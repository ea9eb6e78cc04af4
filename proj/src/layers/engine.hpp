#pragma once

// Internal pieces shared by the layer implementations.

#include <cmath>
#include <memory>
#include <vector>

#include "qcnn/layers.hpp"
#include "qcnn/quat.hpp"

namespace qcnn::detail {

// Patch geometry for a convolution over an input that is first zero-inserted
// by `up` (transposed conv) and zero-padded. Coordinates in the dilated,
// padded image map back to input pixels when (pos - pad) % up == 0.
struct ConvGeom {
  int channels = 0;  // real channels
  int in_h = 0, in_w = 0;
  int kernel = 1;
  int stride = 1;
  int up = 1;
  int pad_t = 0, pad_l = 0;
  int out_h = 0, out_w = 0;

  int rows() const { return channels * kernel * kernel; }
  int cols() const { return out_h * out_w; }
  bool trivial() const { return kernel == 1 && stride == 1 && up == 1 && pad_t == 0 && pad_l == 0; }
};

ConvGeom conv_geom(int channels, int h, int w, int kernel, ConvConfig cfg);
ConvGeom transpose_geom(int channels, int h, int w, int kernel, ConvConfig cfg);

// col is rows() x cols(), row index (ch * L + ky) * L + kx.
template <class T>
void im2col(const ConvGeom& g, const T* x, T* col);

// Adds col back into x (x must be zeroed by the caller).
template <class T>
void col2im(const ConvGeom& g, const T* col, T* x);

// Quaternion weights (K, C, taps) -> real matrix (3K, 3C * taps) with
// W[3k+p][(3c+q)*taps + t] = s * f_{(q-p) mod 3}(theta), f_0 = f1.
// With flip, tap t is written at column position taps-1-t.
template <class T>
void expand_quaternion(int k, int c, int taps, bool flip, const T* s, const T* theta, T* w);

// Chain rule back through expand_quaternion; adds into gs and gtheta.
template <class T>
void reduce_quaternion(int k, int c, int taps, bool flip, const T* s, const T* theta, const T* gw, T* gs,
                       T* gtheta);

template <class T>
std::unique_ptr<Layer<T>> make_conv_layer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out);
template <class T>
std::unique_ptr<Layer<T>> make_simple_layer(const LayerSpec& spec, const LayerShape& in, const LayerShape& out);

template <class T>
inline void ensure_shape(Tensor<T>& t, const Shape& s) {
  if (!(t.shape() == s)) t = Tensor<T>(s);
}

}  // namespace qcnn::detail
