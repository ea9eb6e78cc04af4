#include "qcnn/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qcnn/simd.hpp"

namespace qcnn {

double init_bound(int fan_in, int fan_out) { return std::sqrt(6.0) / std::sqrt(double(fan_in + fan_out)); }

template <class T>
void init_quaternion_params(std::span<ParamView<T>> params, Rng& rng) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (auto& p : params) {
    switch (p.role) {
      case ParamRole::angle:
        for (T& v : p.value) v = T(uniform(rng, -half_pi, half_pi));
        break;
      case ParamRole::bias:
        std::fill(p.value.begin(), p.value.end(), T(0));
        break;
      case ParamRole::scale:
      case ParamRole::weight: {
        const double b = init_bound(p.fan_in, p.fan_out);
        // float rounding may push b*u just past b; clamp keeps the bound exact
        for (T& v : p.value) v = std::clamp(T(uniform(rng, -b, b)), T(-b), T(b));
        break;
      }
    }
  }
}

template <class T>
void init_network(Network<T>& net, std::uint64_t seed) {
  Rng rng(seed);
  auto ps = net.params();
  init_quaternion_params<T>(ps, rng);
  net.zero_grad();
}

// ---------------------------------------------------------------------------

template <class T>
LossResult<T> cross_entropy_loss(std::span<const T> probs, int label) {
  if (label < 0 || std::size_t(label) >= probs.size()) throw PreconditionError("label out of range");
  LossResult<T> r;
  r.loss = -std::log(std::max(double(probs[label]), 1e-12));
  r.grad.assign(probs.begin(), probs.end());
  r.grad[label] -= T(1);
  return r;
}

template <class T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  const int n = logits.batch();
  const std::size_t k = logits.shape().sample_size();
  if (labels.size() != std::size_t(n)) throw ShapeError("one label per logit row required");
  LossResult<T> r;
  r.grad.resize(logits.size());
  for (int i = 0; i < n; ++i) {
    const auto p = softmax_head<T>(std::span<const T>(logits.sample(i), k));
    const auto one = cross_entropy_loss<T>(p, labels[i]);
    r.loss += one.loss;
    for (std::size_t j = 0; j < k; ++j) r.grad[i * k + j] = one.grad[j] / T(n);
  }
  r.loss /= n;
  return r;
}

template <class T>
LossResult<T> mse_loss(std::span<const T> out, std::span<const T> target) {
  if (out.size() != target.size() || out.empty()) throw ShapeError("mse needs equal, non-empty inputs");
  LossResult<T> r;
  r.grad.resize(out.size());
  const double scale = 2.0 / double(out.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = double(out[i]) - double(target[i]);
    sum += d * d;
    r.grad[i] = T(scale * d);
  }
  r.loss = sum / double(out.size());
  return r;
}

// ---------------------------------------------------------------------------

std::string_view optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd:
      return "sgd";
    case OptimizerKind::rmsprop:
      return "rmsprop";
    case OptimizerKind::adam:
      return "adam";
  }
  return "unknown";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "adam") return OptimizerKind::adam;
  return std::nullopt;
}

namespace {

template <class T>
void ensure_buffers(std::vector<std::vector<T>>& bufs, std::span<ParamView<T>> params) {
  if (bufs.size() != params.size()) {
    bufs.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) bufs[i].assign(params[i].value.size(), T(0));
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (bufs[i].size() != params[i].value.size()) throw ShapeError("optimizer state does not match parameters");
}

double decayed_lr(const OptimizerConfig& c, std::int64_t step) { return c.lr / (1.0 + c.decay * double(step)); }

}  // namespace

template <class T>
void sgd_step(std::span<ParamView<T>> params, OptimizerState<T>& st) {
  const T lr = T(decayed_lr(st.config, st.step));
  for (auto& p : params) simd::axpy<T>(p.value.size(), -lr, p.grad.data(), p.value.data());
  ++st.step;
}

template <class T>
void rmsprop_step(std::span<ParamView<T>> params, OptimizerState<T>& st) {
  ensure_buffers(st.v, params);
  const T lr = T(decayed_lr(st.config, st.step));
  const T rho = T(st.config.rho), eps = T(st.config.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i].value.data();
    const T* g = params[i].grad.data();
    T* acc = st.v[i].data();
    for (std::size_t j = 0; j < params[i].value.size(); ++j) {
      acc[j] = rho * acc[j] + (T(1) - rho) * g[j] * g[j];
      w[j] -= lr * g[j] / (std::sqrt(acc[j]) + eps);
    }
  }
  ++st.step;
}

template <class T>
void adam_step(std::span<ParamView<T>> params, OptimizerState<T>& st) {
  ensure_buffers(st.m, params);
  ensure_buffers(st.v, params);
  const double t = double(st.step + 1);
  const T lr = T(decayed_lr(st.config, st.step));
  const T b1 = T(st.config.beta1), b2 = T(st.config.beta2), eps = T(st.config.eps);
  const T c1 = T(1.0 - std::pow(st.config.beta1, t)), c2 = T(1.0 - std::pow(st.config.beta2, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i].value.data();
    const T* g = params[i].grad.data();
    T* m = st.m[i].data();
    T* v = st.v[i].data();
    for (std::size_t j = 0; j < params[i].value.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
  ++st.step;
}

template <class T>
void optimizer_step(std::span<ParamView<T>> params, OptimizerState<T>& st) {
  switch (st.config.kind) {
    case OptimizerKind::sgd:
      return sgd_step(params, st);
    case OptimizerKind::rmsprop:
      return rmsprop_step(params, st);
    case OptimizerKind::adam:
      return adam_step(params, st);
  }
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> gather(const Tensor<T>& all, std::span<const int> indices) {
  Tensor<T> out(all.shape().with_batch(int(indices.size())));
  const std::size_t per = all.shape().sample_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= all.batch()) throw ShapeError("sample index out of range");
    std::copy(all.sample(indices[i]), all.sample(indices[i]) + per, out.data() + i * per);
  }
  return out;
}

template <class T>
EpochStats train_epoch(Network<T>& net, const Dataset<T>& data, const TrainOptions<T>& opts,
                       OptimizerState<T>& opt, Rng& rng) {
  const int n = data.size();
  if (n == 0) throw PreconditionError("cannot train on an empty dataset");
  if (opts.batch_size < 1) throw PreconditionError("batch size must be >= 1");
  if (opts.loss == LossKind::cross_entropy && data.labels.size() != std::size_t(n))
    throw ShapeError("classification data needs one label per input");
  if (opts.loss == LossKind::mse && data.targets.batch() != n) throw ShapeError("regression data needs one target per input");

  const std::vector<int> order = shuffled_indices(n, rng);
  auto params = net.params();
  EpochStats stats;
  double loss_sum = 0.0;
  Tensor<T> grad;
  for (int start = 0; start < n; start += opts.batch_size) {
    const int bsz = std::min(opts.batch_size, n - start);
    const int micro = opts.micro_batch > 0 ? std::min(opts.micro_batch, bsz) : bsz;
    net.zero_grad();
    for (int off = 0; off < bsz; off += micro) {
      const int m = std::min(micro, bsz - off);
      const std::span<const int> idx(order.data() + start + off, std::size_t(m));
      Tensor<T> x = gather(data.inputs, idx);
      if (opts.augment) opts.augment(x, rng);
      const Tensor<T>& y = net.forward(x);
      LossResult<T> lr;
      if (opts.loss == LossKind::cross_entropy) {
        std::vector<int> labels;
        for (int i : idx) labels.push_back(data.labels[std::size_t(i)]);
        lr = softmax_cross_entropy(y, labels);
      } else {
        const Tensor<T> target = gather(data.targets, idx);
        lr = mse_loss<T>(y.values(), target.values());
      }
      // both losses are means over the micro batch; rescale to the full batch
      const T scale = T(double(m) / double(bsz));
      for (T& g : lr.grad) g *= scale;
      grad = Tensor<T>(y.shape(), std::move(lr.grad));
      net.backward(grad);
      loss_sum += lr.loss * m;
    }
    optimizer_step<T>(params, opt);
  }
  stats.samples = n;
  stats.mean_loss = loss_sum / n;
  return stats;
}

template <class T>
Tensor<T> predict_all(Network<T>& net, const Tensor<T>& inputs, int chunk) {
  const int n = inputs.batch();
  Tensor<T> out(net.output_shape().with_batch(n));
  const std::size_t per = out.shape().sample_size();
  std::vector<int> idx;
  for (int start = 0; start < n; start += chunk) {
    const int m = std::min(chunk, n - start);
    idx.resize(std::size_t(m));
    for (int i = 0; i < m; ++i) idx[std::size_t(i)] = start + i;
    const Tensor<T>& y = net.forward(gather(inputs, idx));
    std::copy(y.data(), y.data() + y.size(), out.data() + std::size_t(start) * per);
  }
  return out;
}

template <class T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  std::vector<int> out;
  const std::size_t k = logits.shape().sample_size();
  for (int i = 0; i < logits.batch(); ++i) {
    const T* row = logits.sample(i);
    out.push_back(int(std::max_element(row, row + k) - row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'Q', 'C', 'N', 'N'};

template <class T>
constexpr std::string_view precision_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

std::string domain_name(Domain d) { return d == Domain::quaternion ? "quaternion" : "real"; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ParsedFile {
  std::map<std::string, std::string> kv;
  std::vector<std::string> layers;
  std::size_t blob_offset = 0;
  std::vector<char> bytes;
};

ParsedFile read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  ParsedFile f;
  f.bytes.assign(std::istreambuf_iterator<char>(in), {});
  const auto& b = f.bytes;
  if (b.size() < 4 || std::memcmp(b.data(), kMagic, 4) != 0) throw FormatError("not a QCNN checkpoint (bad magic bytes)");
  if (b.size() < 9) throw FormatError("truncated checkpoint header");
  if (std::uint8_t(b[4]) != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(int(std::uint8_t(b[4]))));
  std::uint32_t len = 0;
  std::memcpy(&len, b.data() + 5, 4);
  if (b.size() < 9 + std::size_t(len)) throw FormatError("truncated checkpoint manifest");
  std::istringstream text(std::string(b.data() + 9, len));
  std::string line;
  while (std::getline(text, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("bad manifest line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "layer") f.layers.push_back(value);
    else f.kv[key] = value;
  }
  f.blob_offset = 9 + std::size_t(len);
  return f;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("checkpoint manifest lacks '" + key + "'");
  return it->second;
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, Network<T>& net, const OptimizerState<T>* opt,
                     std::uint64_t seed, const std::map<std::string, std::string>& extra) {
  const NetworkSpec& spec = net.spec();
  auto params = net.params();
  std::ostringstream m;
  m << "name = " << spec.name << "\n";
  m << "precision = " << precision_name<T>() << "\n";
  m << "input_domain = " << domain_name(spec.input_domain) << "\n";
  m << "input = " << spec.in_channels << " " << spec.in_height << " " << spec.in_width << "\n";
  m << "seed = " << seed << "\n";
  m << "param_count = " << net.param_count() << "\n";
  if (opt) {
    const auto& c = opt->config;
    m << "optimizer = " << optimizer_name(c.kind) << "\n";
    m << "lr = " << fmt_double(c.lr) << "\n";
    m << "decay = " << fmt_double(c.decay) << "\n";
    m << "rho = " << fmt_double(c.rho) << "\n";
    m << "beta1 = " << fmt_double(c.beta1) << "\n";
    m << "beta2 = " << fmt_double(c.beta2) << "\n";
    m << "eps = " << fmt_double(c.eps) << "\n";
    m << "step = " << opt->step << "\n";
    m << "optimizer_buffers = " << opt->m.size() << " " << opt->v.size() << "\n";
  }
  for (const auto& [k, v] : extra) m << k << " = " << v << "\n";
  for (const auto& l : spec.layers) m << "layer = " << format_layer(l) << "\n";
  const std::string manifest = m.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  out.put(char(kCheckpointVersion));
  const std::uint32_t len = std::uint32_t(manifest.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(manifest.data(), std::streamsize(manifest.size()));
  for (const auto& p : params) out.write(reinterpret_cast<const char*>(p.value.data()), std::streamsize(p.value.size_bytes()));
  if (opt) {
    std::uint64_t bytes = 0;
    for (const auto& b : opt->m) bytes += b.size() * sizeof(T);
    for (const auto& b : opt->v) bytes += b.size() * sizeof(T);
    out.write(reinterpret_cast<const char*>(&bytes), 8);
    for (const auto& b : opt->m) out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size() * sizeof(T)));
    for (const auto& b : opt->v) out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size() * sizeof(T)));
  }
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

std::string checkpoint_precision(const std::filesystem::path& path) { return require(read_header(path).kv, "precision"); }

template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  ParsedFile f = read_header(path);
  if (require(f.kv, "precision") != precision_name<T>())
    throw FormatError("checkpoint precision " + f.kv["precision"] + " does not match requested " +
                      std::string(precision_name<T>()));
  Checkpoint<T> ck;
  ck.manifest = f.kv;
  NetworkSpec& spec = ck.spec;
  spec.name = require(f.kv, "name");
  spec.input_domain = require(f.kv, "input_domain") == "quaternion" ? Domain::quaternion : Domain::real;
  {
    std::istringstream is(require(f.kv, "input"));
    if (!(is >> spec.in_channels >> spec.in_height >> spec.in_width)) throw FormatError("bad input shape in manifest");
  }
  try {
    for (const auto& l : f.layers) spec.layers.push_back(parse_layer(l));
    ck.network = std::make_unique<Network<T>>(spec);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint topology is invalid: ") + e.what());
  }
  ck.seed = std::stoull(require(f.kv, "seed"));

  std::size_t pos = f.blob_offset;
  auto take = [&](void* dst, std::size_t n, const char* what) {
    if (f.bytes.size() < pos + n)
      throw FormatError(std::string("truncated checkpoint: ") + what + " needs " + std::to_string(n) + " bytes, " +
                        std::to_string(f.bytes.size() - std::min(pos, f.bytes.size())) + " available");
    std::memcpy(dst, f.bytes.data() + pos, n);
    pos += n;
  };
  for (auto& p : ck.network->params()) take(p.value.data(), p.value.size_bytes(), "parameter blob");

  if (f.kv.count("optimizer")) {
    OptimizerConfig c;
    const auto kind = parse_optimizer(f.kv["optimizer"]);
    if (!kind) throw FormatError("unknown optimizer in manifest");
    c.kind = *kind;
    c.lr = std::stod(require(f.kv, "lr"));
    c.decay = std::stod(require(f.kv, "decay"));
    c.rho = std::stod(require(f.kv, "rho"));
    c.beta1 = std::stod(require(f.kv, "beta1"));
    c.beta2 = std::stod(require(f.kv, "beta2"));
    c.eps = std::stod(require(f.kv, "eps"));
    OptimizerState<T> st(c);
    st.step = std::stoll(require(f.kv, "step"));
    std::size_t nm = 0, nv = 0;
    std::istringstream(require(f.kv, "optimizer_buffers")) >> nm >> nv;
    std::uint64_t bytes = 0;
    take(&bytes, 8, "optimizer state length");
    auto params = ck.network->params();
    auto fill = [&](std::vector<std::vector<T>>& bufs, std::size_t count) {
      if (count != 0 && count != params.size()) throw FormatError("optimizer buffers do not match parameters");
      bufs.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        bufs[i].resize(params[i].value.size());
        take(bufs[i].data(), bufs[i].size() * sizeof(T), "optimizer state");
      }
    };
    const std::size_t before = pos;
    fill(st.m, nm);
    fill(st.v, nv);
    if (pos - before != bytes) throw FormatError("optimizer state length does not match its prefix");
    ck.optimizer = std::move(st);
  }
  if (pos != f.bytes.size()) throw FormatError("checkpoint has " + std::to_string(f.bytes.size() - pos) + " trailing bytes");
  return ck;
}

#define QCNN_INSTANTIATE(T)                                                                                        \
  template void init_quaternion_params<T>(std::span<ParamView<T>>, Rng&);                                          \
  template void init_network<T>(Network<T>&, std::uint64_t);                                                       \
  template LossResult<T> cross_entropy_loss<T>(std::span<const T>, int);                                           \
  template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const int>);                         \
  template LossResult<T> mse_loss<T>(std::span<const T>, std::span<const T>);                                      \
  template void sgd_step<T>(std::span<ParamView<T>>, OptimizerState<T>&);                                          \
  template void rmsprop_step<T>(std::span<ParamView<T>>, OptimizerState<T>&);                                      \
  template void adam_step<T>(std::span<ParamView<T>>, OptimizerState<T>&);                                         \
  template void optimizer_step<T>(std::span<ParamView<T>>, OptimizerState<T>&);                                    \
  template Tensor<T> gather<T>(const Tensor<T>&, std::span<const int>);                                            \
  template EpochStats train_epoch<T>(Network<T>&, const Dataset<T>&, const TrainOptions<T>&, OptimizerState<T>&, \
                                     Rng&);                                                                        \
  template Tensor<T> predict_all<T>(Network<T>&, const Tensor<T>&, int);                                           \
  template std::vector<int> argmax_rows<T>(const Tensor<T>&);                                                      \
  template void save_checkpoint<T>(const std::filesystem::path&, Network<T>&, const OptimizerState<T>*,          \
                                   std::uint64_t, const std::map<std::string, std::string>&);                      \
  template Checkpoint<T> load_checkpoint<T>(const std::filesystem::path&);

QCNN_INSTANTIATE(float)
QCNN_INSTANTIATE(double)
#undef QCNN_INSTANTIATE

}  // namespace qcnn
