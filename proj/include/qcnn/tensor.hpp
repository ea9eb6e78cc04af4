#pragma once

// Feature-map containers.
//
// Everything is stored as a dense NCHW Tensor of reals. A quaternion feature
// map with C channels is a tensor with 3C real channels laid out as
// (C, 3, H, W): the three imaginary parts of channel c occupy real channels
// 3c, 3c+1, 3c+2. The real part is never stored. This makes split_to_real a
// pure relabeling and lets per-part pooling and activations reuse the real
// kernels unchanged.
//
// A QVector of N quaternions is a tensor of shape (1, 3N, 1, 1), i.e. a
// quaternion map with N channels and 1x1 spatial extent.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qcnn/error.hpp"
#include "qcnn/quat.hpp"

namespace qcnn {

struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  Shape with_batch(int batch) const { return {batch, c, h, w}; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw ShapeError("tensor data does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T* sample(int i) { return data_.data() + i * shape_.sample_size(); }
  const T* sample(int i) const { return data_.data() + i * shape_.sample_size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Reinterprets the same values under a new shape of equal size.
  void reshape(Shape s) {
    if (s.size() != data_.size()) throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(s));
    shape_ = s;
  }

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

/// Single-sample real map (1, C, H, W).
template <class T>
using RealFeatureMap = Tensor<T>;

/// Pure-quaternion feature map, logical shape (C, 3, H, W).
template <class T>
class QFeatureMap {
 public:
  QFeatureMap() = default;
  QFeatureMap(int channels, int height, int width);

  /// Wraps a (1, 3C, H, W) tensor. Throws ShapeError otherwise.
  static QFeatureMap from_tensor(Tensor<T> t);

  int channels() const { return t_.channels() / 3; }
  int height() const { return t_.height(); }
  int width() const { return t_.width(); }

  T& at(int c, int part, int y, int x) { return t_.at(0, 3 * c + part, y, x); }
  const T& at(int c, int part, int y, int x) const { return t_.at(0, 3 * c + part, y, x); }

  ColorVector pixel(int c, int y, int x) const {
    return {double(at(c, 0, y, x)), double(at(c, 1, y, x)), double(at(c, 2, y, x))};
  }
  void set_pixel(int c, int y, int x, const ColorVector& v) {
    at(c, 0, y, x) = T(v.r);
    at(c, 1, y, x) = T(v.g);
    at(c, 2, y, x) = T(v.b);
  }

  const Tensor<T>& tensor() const { return t_; }
  Tensor<T>& tensor() { return t_; }

 private:
  Tensor<T> t_;
};

/// N pure quaternions, logical shape (N, 3).
template <class T>
class QVector {
 public:
  QVector() = default;
  explicit QVector(int size) : t_(Shape{1, 3 * size, 1, 1}) {}
  static QVector from_tensor(Tensor<T> t);

  int size() const { return t_.channels() / 3; }
  T& at(int i, int part) { return t_[3 * static_cast<std::size_t>(i) + part]; }
  const T& at(int i, int part) const { return t_[3 * static_cast<std::size_t>(i) + part]; }

  const Tensor<T>& tensor() const { return t_; }
  Tensor<T>& tensor() { return t_; }

 private:
  Tensor<T> t_;
};

/// Interleaved 8-bit-derived RGB image, values nominally in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height * width * 3, row-major, RGB interleaved

  Image() = default;
  Image(int h, int w, float fill = 0.0f) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

  float& at(int y, int x, int ch) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
  float at(int y, int x, int ch) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// One quaternion channel per pixel: part 0 <- R, part 1 <- G, part 2 <- B.
/// Throws ValidationError for values outside [0,1].
template <class T>
QFeatureMap<T> from_rgb_image(const Image& img);

/// Inverse of from_rgb_image. Throws ShapeError unless the map has one channel.
template <class T>
Image to_rgb_image(const QFeatureMap<T>& m);

/// 3C real channels, out[3c + p] = m[c, p].
template <class T>
RealFeatureMap<T> split_to_real(const QFeatureMap<T>& m);

/// 3CHW reals ordered (c, y, x, part).
template <class T>
std::vector<T> flatten_quaternion(const QFeatureMap<T>& m);

/// Inverse of flatten_quaternion.
template <class T>
QFeatureMap<T> unflatten_quaternion(std::span<const T> v, int channels, int height, int width);

/// Grayscale plane (1, 1, H, W) -> one quaternion channel with equal parts.
template <class T>
QFeatureMap<T> embed_grayscale(const Tensor<T>& plane);

/// Stacks single images into a (N, 3, H, W) batch; all images must share a size.
template <class T>
Tensor<T> images_to_batch(std::span<const Image> images);

/// Sample i of a (N, 3, H, W) batch as an image, values clamped to [0,1].
template <class T>
Image batch_to_image(const Tensor<T>& batch, int i);

}  // namespace qcnn
