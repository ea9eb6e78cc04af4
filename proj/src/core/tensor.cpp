#include "qcnn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace qcnn {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

template <class T>
QFeatureMap<T>::QFeatureMap(int channels, int height, int width) {
  if (channels < 1 || height < 1 || width < 1) throw ShapeError("quaternion map dimensions must be >= 1");
  t_ = Tensor<T>(Shape{1, 3 * channels, height, width});
}

template <class T>
QFeatureMap<T> QFeatureMap<T>::from_tensor(Tensor<T> t) {
  if (t.batch() != 1 || t.channels() % 3 != 0 || t.channels() == 0)
    throw ShapeError("tensor " + to_string(t.shape()) + " is not a single quaternion map");
  QFeatureMap m;
  m.t_ = std::move(t);
  return m;
}

template <class T>
QVector<T> QVector<T>::from_tensor(Tensor<T> t) {
  if (t.batch() != 1 || t.channels() % 3 != 0 || t.height() != 1 || t.width() != 1)
    throw ShapeError("tensor " + to_string(t.shape()) + " is not a quaternion vector");
  QVector v;
  v.t_ = std::move(t);
  return v;
}

template <class T>
QFeatureMap<T> from_rgb_image(const Image& img) {
  QFeatureMap<T> m(1, img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        const float v = img.at(y, x, ch);
        if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("pixel value outside [0,1]");
        m.at(0, ch, y, x) = T(v);
      }
    }
  }
  return m;
}

template <class T>
Image to_rgb_image(const QFeatureMap<T>& m) {
  if (m.channels() != 1) throw ShapeError("to_rgb_image needs exactly one quaternion channel");
  Image img(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = static_cast<float>(m.at(0, ch, y, x));
  return img;
}

template <class T>
RealFeatureMap<T> split_to_real(const QFeatureMap<T>& m) {
  return m.tensor();
}

template <class T>
std::vector<T> flatten_quaternion(const QFeatureMap<T>& m) {
  const int c = m.channels(), h = m.height(), w = m.width();
  std::vector<T> out(static_cast<std::size_t>(3) * c * h * w);
  std::size_t i = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int p = 0; p < 3; ++p) out[i++] = m.at(ch, p, y, x);
  return out;
}

template <class T>
QFeatureMap<T> unflatten_quaternion(std::span<const T> v, int channels, int height, int width) {
  QFeatureMap<T> m(channels, height, width);
  if (v.size() != static_cast<std::size_t>(3) * channels * height * width)
    throw ShapeError("flattened length does not match quaternion map shape");
  std::size_t i = 0;
  for (int ch = 0; ch < channels; ++ch)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int p = 0; p < 3; ++p) m.at(ch, p, y, x) = v[i++];
  return m;
}

template <class T>
QFeatureMap<T> embed_grayscale(const Tensor<T>& plane) {
  if (plane.batch() != 1 || plane.channels() != 1) throw ShapeError("embed_grayscale expects a (1,1,H,W) plane");
  QFeatureMap<T> m(1, plane.height(), plane.width());
  for (int y = 0; y < plane.height(); ++y)
    for (int x = 0; x < plane.width(); ++x)
      for (int p = 0; p < 3; ++p) m.at(0, p, y, x) = plane.at(0, 0, y, x);
  return m;
}

template <class T>
Tensor<T> images_to_batch(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("empty image batch");
  const int h = images[0].height, w = images[0].width;
  Tensor<T> out(Shape{static_cast<int>(images.size()), 3, h, w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if (img.height != h || img.width != w) throw ShapeError("images in a batch must share one size");
    T* dst = out.sample(static_cast<int>(i));
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t px = 0; px < plane; ++px)
      for (int ch = 0; ch < 3; ++ch) dst[ch * plane + px] = T(img.pixels[px * 3 + ch]);
  }
  return out;
}

template <class T>
Image batch_to_image(const Tensor<T>& batch, int i) {
  if (batch.channels() != 3) throw ShapeError("batch_to_image expects 3 channels");
  Image img(batch.height(), batch.width());
  const T* src = batch.sample(i);
  const std::size_t plane = batch.shape().plane();
  for (std::size_t px = 0; px < plane; ++px)
    for (int ch = 0; ch < 3; ++ch)
      img.pixels[px * 3 + ch] = std::clamp(static_cast<float>(src[ch * plane + px]), 0.0f, 1.0f);
  return img;
}

#define QCNN_INSTANTIATE(T)                                                                      \
  template class QFeatureMap<T>;                                                                 \
  template class QVector<T>;                                                                     \
  template QFeatureMap<T> from_rgb_image<T>(const Image&);                                       \
  template Image to_rgb_image<T>(const QFeatureMap<T>&);                                         \
  template RealFeatureMap<T> split_to_real<T>(const QFeatureMap<T>&);                            \
  template std::vector<T> flatten_quaternion<T>(const QFeatureMap<T>&);                          \
  template QFeatureMap<T> unflatten_quaternion<T>(std::span<const T>, int, int, int);            \
  template QFeatureMap<T> embed_grayscale<T>(const Tensor<T>&);                                  \
  template Tensor<T> images_to_batch<T>(std::span<const Image>);                                 \
  template Image batch_to_image<T>(const Tensor<T>&, int);

QCNN_INSTANTIATE(float)
QCNN_INSTANTIATE(double)
#undef QCNN_INSTANTIATE

}  // namespace qcnn
