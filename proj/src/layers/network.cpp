#include "qcnn/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qcnn/simd.hpp"

namespace qcnn {

template <class T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  shapes_ = infer_shapes(spec_);
  LayerShape in{spec_.input_shape(), spec_.input_domain};
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    layers_.push_back(make_layer<T>(spec_.layers[i], in));
    in = shapes_[i];
  }
  acts_.resize(layers_.size() + 1);
  pending_.resize(layers_.size() + 1);
}

template <class T>
const Tensor<T>& Network<T>::forward(const Tensor<T>& x) {
  const Shape in = spec_.input_shape();
  if (x.channels() != in.c || x.height() != in.h || x.width() != in.w || x.batch() < 1)
    throw ShapeError("network expects per-sample input " + to_string(in) + ", got " + to_string(x.shape()));
  acts_[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(acts_[i], acts_[i + 1]);
    const LayerSpec& ls = spec_.layers[i];
    if (ls.kind == LayerKind::skip_add) {
      const Tensor<T>& other = acts_[std::size_t(ls.skip_from) + 1];
      simd::axpy<T>(other.size(), T(1), other.data(), acts_[i + 1].data());
    }
  }
  return acts_.back();
}

template <class T>
void Network<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_input) {
  if (!(grad_out.shape() == acts_.back().shape()))
    throw ShapeError("output gradient " + to_string(grad_out.shape()) + " does not match output " +
                     to_string(acts_.back().shape()));
  std::vector<bool> has_pending(pending_.size(), false);
  const Tensor<T>* g = &grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (has_pending[i + 1]) {
      Tensor<T>& buf = g == &grad_a_ ? grad_a_ : g == &grad_b_ ? grad_b_ : (grad_a_ = *g, grad_a_);
      simd::axpy<T>(buf.size(), T(1), pending_[i + 1].data(), buf.data());
      g = &buf;
    }
    const LayerSpec& ls = spec_.layers[i];
    if (ls.kind == LayerKind::skip_add) {
      const std::size_t j = std::size_t(ls.skip_from) + 1;
      if (has_pending[j]) {
        simd::axpy<T>(g->size(), T(1), g->data(), pending_[j].data());
      } else {
        pending_[j] = *g;
        has_pending[j] = true;
      }
      continue;  // identity for the main path
    }
    Tensor<T>* out = g == &grad_a_ ? &grad_b_ : &grad_a_;
    const bool need_input_grad = i > 0 || grad_input != nullptr;
    layers_[i]->backward(acts_[i], acts_[i + 1], *g, need_input_grad ? out : nullptr);
    if (!need_input_grad) return;
    g = out;
  }
  if (grad_input) *grad_input = *g;
}

template <class T>
std::vector<ParamView<T>> Network<T>::params() {
  std::vector<ParamView<T>> all;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (auto& p : layers_[i]->params()) {
      p.name = std::to_string(i) + "." + std::string(kind_name(layers_[i]->kind())) + "." + p.name;
      all.push_back(std::move(p));
    }
  return all;
}

template <class T>
std::int64_t Network<T>::param_count() {
  std::int64_t n = 0;
  for (const auto& p : params()) n += std::int64_t(p.value.size());
  return n;
}

template <class T>
void Network<T>::zero_grad() {
  for (auto& l : layers_) l->zero_grad();
}

template class Network<float>;
template class Network<double>;

// ---------------------------------------------------------------------------

namespace {

int scaled(int width, bool quaternion, double ratio) {
  if (!quaternion) return width;
  if (!(ratio > 0.0)) throw std::invalid_argument("filter ratio must be positive");
  return std::max(1, int(std::lround(width * ratio)));
}

LayerSpec conv(bool q, int units, int kernel, int stride = 1) {
  LayerSpec l;
  l.kind = q ? LayerKind::qconv : LayerKind::conv;
  l.units = units;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerSpec conv_t(bool q, int units, int kernel) {
  LayerSpec l = conv(q, units, kernel);
  l.kind = q ? LayerKind::qconv_transpose : LayerKind::conv_transpose;
  return l;
}

LayerSpec simple(LayerKind kind, int kernel = 1) {
  LayerSpec l;
  l.kind = kind;
  l.kernel = kernel;
  return l;
}

LayerSpec relu(bool q) { return simple(q ? LayerKind::qrelu : LayerKind::relu); }
LayerSpec max_pool(bool q, int k) { return simple(q ? LayerKind::qmax_pool : LayerKind::max_pool, k); }
LayerSpec avg_pool(bool q, int k) { return simple(q ? LayerKind::qavg_pool : LayerKind::avg_pool, k); }

LayerSpec dense(bool q, int units) {
  LayerSpec l;
  l.kind = q ? LayerKind::qdense : LayerKind::dense;
  l.units = units;
  return l;
}

LayerSpec skip(int from) {
  LayerSpec l = simple(LayerKind::skip_add);
  l.skip_from = from;
  return l;
}

NetworkSpec base(const std::string& name, bool q, int size) {
  NetworkSpec s;
  s.name = name;
  s.input_domain = q ? Domain::quaternion : Domain::real;
  s.in_channels = 3;
  s.in_height = size;
  s.in_width = size;
  return s;
}

}  // namespace

NetworkSpec preset_shallow_cifar(bool q, double ratio, ShallowWidths w) {
  NetworkSpec s = base("shallow-cifar", q, 32);
  auto& L = s.layers;
  L.push_back(conv(q, scaled(w.conv1, q, ratio), 3));
  L.push_back(relu(q));
  L.push_back(conv(q, scaled(w.conv2, q, ratio), 3));
  L.push_back(relu(q));
  L.push_back(max_pool(q, 2));
  L.push_back(conv(q, scaled(w.conv3, q, ratio), 3));
  L.push_back(relu(q));
  L.push_back(conv(q, scaled(w.conv4, q, ratio), 3));
  L.push_back(relu(q));
  L.push_back(max_pool(q, 2));
  L.push_back(simple(q ? LayerKind::flatten_quaternion : LayerKind::flatten));
  L.push_back(dense(q, scaled(w.hidden, q, ratio)));
  L.push_back(relu(q));
  // The real net keeps a (no-op) flatten here so both variants share one topology.
  L.push_back(simple(q ? LayerKind::split : LayerKind::flatten));
  L.push_back(dense(false, w.classes));
  infer_shapes(s);
  return s;
}

NetworkSpec preset_denoiser(bool q, double ratio, int width, int size) {
  if (size % 4 != 0) throw std::invalid_argument("denoiser input size must be a multiple of 4");
  NetworkSpec s = base("denoiser", q, size);
  const int k = scaled(width, q, ratio);
  auto& L = s.layers;
  auto block = [&](bool transpose) {
    for (int i = 0; i < 2; ++i) {
      L.push_back(transpose ? conv_t(q, k, 3) : conv(q, k, 3));
      L.push_back(relu(q));
    }
  };
  block(false);
  const int skip_a = int(L.size()) - 1;
  L.push_back(avg_pool(q, 2));
  block(false);
  const int skip_b = int(L.size()) - 1;
  L.push_back(avg_pool(q, 2));
  block(false);
  // "fully-connected" bottleneck, applied per pixel
  L.push_back(conv(q, k, 1));
  L.push_back(relu(q));
  L.push_back(conv_t(q, k, 1));
  L.push_back(relu(q));
  block(true);
  L.push_back(simple(LayerKind::upsample, 2));
  L.push_back(skip(skip_b));
  block(true);
  L.push_back(simple(LayerKind::upsample, 2));
  L.push_back(skip(skip_a));
  L.push_back(conv_t(q, k, 3));
  L.push_back(relu(q));
  L.push_back(conv_t(q, q ? 1 : 3, 3));
  L.push_back(simple(LayerKind::tanh));
  infer_shapes(s);
  return s;
}

NetworkSpec preset_vgg_s(bool q, double ratio) {
  NetworkSpec s = base("vgg-s", q, 224);
  auto& L = s.layers;
  L.push_back(conv(q, scaled(96, q, ratio), 7, 2));
  L.push_back(relu(q));
  L.push_back(max_pool(q, 2));
  L.push_back(conv(q, scaled(256, q, ratio), 5));
  L.push_back(relu(q));
  L.push_back(max_pool(q, 2));
  for (int i = 0; i < 3; ++i) {
    L.push_back(conv(q, scaled(512, q, ratio), 3));
    L.push_back(relu(q));
  }
  L.push_back(max_pool(q, 4));
  L.push_back(simple(q ? LayerKind::flatten_quaternion : LayerKind::flatten));
  L.push_back(dense(q, scaled(4096, q, ratio)));
  L.push_back(relu(q));
  L.push_back(dense(q, scaled(4096, q, ratio)));
  L.push_back(relu(q));
  L.push_back(simple(q ? LayerKind::split : LayerKind::flatten));
  L.push_back(dense(false, 102));
  infer_shapes(s);
  return s;
}

double default_filter_ratio(const std::string& preset) {
  return preset == "shallow-cifar" ? 1.0 : std::numbers::sqrt2 / 2.0;
}

bool is_preset(const std::string& name) { return name == "shallow-cifar" || name == "denoiser" || name == "vgg-s"; }

NetworkSpec make_preset(const std::string& name, bool quaternion, double ratio) {
  if (name == "shallow-cifar") return preset_shallow_cifar(quaternion, ratio);
  if (name == "denoiser") return preset_denoiser(quaternion, ratio);
  if (name == "vgg-s") return preset_vgg_s(quaternion, ratio);
  throw std::invalid_argument("unknown preset '" + name + "' (expected shallow-cifar, denoiser or vgg-s)");
}

namespace {

LayerCost sum_cost(const NetworkSpec& spec, bool conv_only) {
  const auto shapes = infer_shapes(spec);
  LayerCost total;
  LayerShape in{spec.input_shape(), spec.input_domain};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerKind k = spec.layers[i].kind;
    const bool is_conv = k == LayerKind::qconv || k == LayerKind::conv || k == LayerKind::qconv_transpose ||
                         k == LayerKind::conv_transpose;
    if (!conv_only || is_conv) {
      const LayerCost c = count_params_and_mults(spec.layers[i], in);
      total.params += c.params;
      total.mults += c.mults;
    }
    in = shapes[i];
  }
  return total;
}

}  // namespace

LayerCost total_cost(const NetworkSpec& spec) { return sum_cost(spec, false); }
LayerCost conv_cost(const NetworkSpec& spec) { return sum_cost(spec, true); }

}  // namespace qcnn
