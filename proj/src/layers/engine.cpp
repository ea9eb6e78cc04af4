#include "engine.hpp"

#include <algorithm>

namespace qcnn::detail {

ConvGeom conv_geom(int channels, int h, int w, int kernel, ConvConfig cfg) {
  ConvGeom g;
  g.channels = channels;
  g.in_h = h;
  g.in_w = w;
  g.kernel = kernel;
  g.stride = cfg.stride;
  if (cfg.padding == Padding::same) {
    g.out_h = (h + cfg.stride - 1) / cfg.stride;
    g.out_w = (w + cfg.stride - 1) / cfg.stride;
    g.pad_t = std::max((g.out_h - 1) * cfg.stride + kernel - h, 0) / 2;
    g.pad_l = std::max((g.out_w - 1) * cfg.stride + kernel - w, 0) / 2;
  } else {
    g.out_h = (h - kernel) / cfg.stride + 1;
    g.out_w = (w - kernel) / cfg.stride + 1;
  }
  return g;
}

// The transposed layer is the adjoint of conv_geom at the same stride, so the
// "same" padding mirrors the forward split: pad_t = L-1-floor(max(L-s,0)/2).
ConvGeom transpose_geom(int channels, int h, int w, int kernel, ConvConfig cfg) {
  ConvGeom g;
  g.channels = channels;
  g.in_h = h;
  g.in_w = w;
  g.kernel = kernel;
  g.stride = 1;
  g.up = cfg.stride;
  if (cfg.padding == Padding::same) {
    const int fwd = std::max(kernel - cfg.stride, 0) / 2;
    g.pad_t = g.pad_l = kernel - 1 - fwd;
    g.out_h = h * cfg.stride;
    g.out_w = w * cfg.stride;
  } else {
    g.pad_t = g.pad_l = kernel - 1;
    g.out_h = (h - 1) * cfg.stride + kernel;
    g.out_w = (w - 1) * cfg.stride + kernel;
  }
  return g;
}

namespace {

// src[i] = input row/column feeding output o at kernel offset k, or -1.
void source_index(int out, int in, int kernel, int stride, int up, int pad, std::vector<int>& src) {
  src.assign(std::size_t(kernel) * out, -1);
  const int dilated = (in - 1) * up + 1;
  for (int k = 0; k < kernel; ++k) {
    for (int o = 0; o < out; ++o) {
      const int pos = o * stride + k - pad;
      if (pos < 0 || pos >= dilated || pos % up != 0) continue;
      src[std::size_t(k) * out + o] = pos / up;
    }
  }
}

}  // namespace

template <class T>
void im2col(const ConvGeom& g, const T* x, T* col) {
  thread_local std::vector<int> sy, sx;
  source_index(g.out_h, g.in_h, g.kernel, g.stride, g.up, g.pad_t, sy);
  source_index(g.out_w, g.in_w, g.kernel, g.stride, g.up, g.pad_l, sx);
  const std::size_t plane = std::size_t(g.in_h) * g.in_w;
  T* out = col;
  for (int ch = 0; ch < g.channels; ++ch) {
    const T* xc = x + ch * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      const int* rows = sy.data() + std::size_t(ky) * g.out_h;
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int* cols = sx.data() + std::size_t(kx) * g.out_w;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = rows[oy];
          if (iy < 0) {
            std::fill(out, out + g.out_w, T(0));
          } else {
            const T* xr = xc + std::size_t(iy) * g.in_w;
            for (int ox = 0; ox < g.out_w; ++ox) out[ox] = cols[ox] < 0 ? T(0) : xr[cols[ox]];
          }
          out += g.out_w;
        }
      }
    }
  }
}

template <class T>
void col2im(const ConvGeom& g, const T* col, T* x) {
  thread_local std::vector<int> sy, sx;
  source_index(g.out_h, g.in_h, g.kernel, g.stride, g.up, g.pad_t, sy);
  source_index(g.out_w, g.in_w, g.kernel, g.stride, g.up, g.pad_l, sx);
  const std::size_t plane = std::size_t(g.in_h) * g.in_w;
  const T* in = col;
  for (int ch = 0; ch < g.channels; ++ch) {
    T* xc = x + ch * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      const int* rows = sy.data() + std::size_t(ky) * g.out_h;
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int* cols = sx.data() + std::size_t(kx) * g.out_w;
        for (int oy = 0; oy < g.out_h; ++oy, in += g.out_w) {
          const int iy = rows[oy];
          if (iy < 0) continue;
          T* xr = xc + std::size_t(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox)
            if (cols[ox] >= 0) xr[cols[ox]] += in[ox];
        }
      }
    }
  }
}

template <class T>
void expand_quaternion(int k, int c, int taps, bool flip, const T* s, const T* theta, T* w) {
  const std::size_t ld = std::size_t(3) * c * taps;
  for (int ko = 0; ko < k; ++ko) {
    for (int ci = 0; ci < c; ++ci) {
      for (int t = 0; t < taps; ++t) {
        const std::size_t idx = (std::size_t(ko) * c + ci) * taps + t;
        const RotationCoeffs r = rotation_coeffs(double(theta[idx]));
        const double sc = double(s[idx]);
        const T f[3] = {T(sc * r.f1), T(sc * r.f2), T(sc * r.f3)};
        const int col_t = flip ? taps - 1 - t : t;
        for (int p = 0; p < 3; ++p) {
          T* row = w + (std::size_t(3) * ko + p) * ld;
          for (int q = 0; q < 3; ++q) row[(std::size_t(3) * ci + q) * taps + col_t] = f[(q - p + 3) % 3];
        }
      }
    }
  }
}

template <class T>
void reduce_quaternion(int k, int c, int taps, bool flip, const T* s, const T* theta, const T* gw, T* gs,
                       T* gtheta) {
  const std::size_t ld = std::size_t(3) * c * taps;
  for (int ko = 0; ko < k; ++ko) {
    for (int ci = 0; ci < c; ++ci) {
      for (int t = 0; t < taps; ++t) {
        const std::size_t idx = (std::size_t(ko) * c + ci) * taps + t;
        const RotationCoeffs r = rotation_coeffs(double(theta[idx]));
        const RotationCoeffs d = rotation_coeffs_deriv(double(theta[idx]));
        const double f[3] = {r.f1, r.f2, r.f3};
        const double fd[3] = {d.f1, d.f2, d.f3};
        const int col_t = flip ? taps - 1 - t : t;
        double acc_s = 0.0, acc_t = 0.0;
        for (int p = 0; p < 3; ++p) {
          const T* row = gw + (std::size_t(3) * ko + p) * ld;
          for (int q = 0; q < 3; ++q) {
            const double g = double(row[(std::size_t(3) * ci + q) * taps + col_t]);
            acc_s += g * f[(q - p + 3) % 3];
            acc_t += g * fd[(q - p + 3) % 3];
          }
        }
        gs[idx] += T(acc_s);
        gtheta[idx] += T(double(s[idx]) * acc_t);
      }
    }
  }
}

#define QCNN_INSTANTIATE(T)                                                                                   \
  template void im2col<T>(const ConvGeom&, const T*, T*);                                                     \
  template void col2im<T>(const ConvGeom&, const T*, T*);                                                     \
  template void expand_quaternion<T>(int, int, int, bool, const T*, const T*, T*);                            \
  template void reduce_quaternion<T>(int, int, int, bool, const T*, const T*, const T*, T*, T*);

QCNN_INSTANTIATE(float)
QCNN_INSTANTIATE(double)
#undef QCNN_INSTANTIATE

}  // namespace qcnn::detail
