#include "qcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "qcnn/training.hpp"

namespace qcnn {

double GradCheckReport::max_rel() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel);
  return m;
}

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& probe,
                                     std::span<const double> params, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("finite-difference step must be positive");
  std::vector<double> p(params.begin(), params.end()), g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + eps;
    const double up = probe(p);
    p[i] = keep - eps;
    const double down = probe(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

QFeatureMap<double> oracle_qconv(const QFeatureMap<double>& x, const QConvKernel<double>& k, ConvConfig cfg) {
  if (k.in_channels != x.channels()) throw ShapeError("kernel channel count does not match input");
  const int h = x.height(), w = x.width(), l = k.size, st = cfg.stride;
  int oh, ow, pt = 0, pl = 0;
  if (cfg.padding == Padding::same) {
    oh = (h + st - 1) / st;
    ow = (w + st - 1) / st;
    pt = std::max((oh - 1) * st + l - h, 0) / 2;
    pl = std::max((ow - 1) * st + l - w, 0) / 2;
  } else {
    if (l > h || l > w) throw ShapeError("kernel larger than input");
    oh = (h - l) / st + 1;
    ow = (w - l) / st + 1;
  }
  QFeatureMap<double> out(k.out_channels, oh, ow);
  for (int ko = 0; ko < k.out_channels; ++ko)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        ColorVector acc;
        for (int c = 0; c < k.in_channels; ++c)
          for (int ky = 0; ky < l; ++ky)
            for (int kx = 0; kx < l; ++kx) {
              const int iy = oy * st + ky - pt, ix = ox * st + kx - pl;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              const std::size_t t = k.index(ko, c, ky, kx);
              const ColorVector r = rotate_about_axis(x.pixel(c, iy, ix), kGrayAxis, k.theta[t]);
              acc.r += k.s[t] * r.r;
              acc.g += k.s[t] * r.g;
              acc.b += k.s[t] * r.b;
            }
        out.set_pixel(ko, oy, ox, acc);
      }
  return out;
}

namespace {

struct Target {
  std::function<void(const Tensor<double>&, Tensor<double>&)> forward;
  std::function<void(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, Tensor<double>*)> backward;
  std::function<void()> zero_grad;
  std::vector<ParamView<double>> params;
  Shape in;
  Shape out;
};

void randomize(std::span<double> v, Rng& rng, double lo, double hi) {
  for (double& x : v) x = uniform(rng, lo, hi);
}

void randomize_params(std::vector<ParamView<double>>& params, Rng& rng) {
  for (auto& p : params) {
    if (p.role == ParamRole::angle) randomize(p.value, rng, -std::numbers::pi, std::numbers::pi);
    else randomize(p.value, rng, -1.0, 1.0);
  }
}

bool away_from_zero(const Tensor<double>& x) {
  return std::all_of(x.values().begin(), x.values().end(), [](double v) { return std::abs(v) >= 1e-3; });
}

bool pool_windows_untied(const Tensor<double>& x, int k) {
  const int h = x.height(), w = x.width();
  const std::size_t planes = std::size_t(x.batch()) * x.channels();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* xp = x.data() + p * h * w;
    for (int y0 = 0; y0 + k <= h; y0 += k)
      for (int x0 = 0; x0 + k <= w; x0 += k) {
        std::vector<double> v;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) v.push_back(xp[(y0 + dy) * w + x0 + dx]);
        std::sort(v.rbegin(), v.rend());
        if (v.size() > 1 && v[0] - v[1] < 1e-3) return false;
      }
  }
  return true;
}

GroupError compare(const std::string& name, std::span<const double> analytic, std::span<const double> numeric) {
  GroupError g;
  g.name = name;
  g.count = analytic.size();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double rel = relative_error(analytic[i], numeric[i]);
    g.max_abs = std::max(g.max_abs, std::abs(analytic[i] - numeric[i]));
    if (rel > g.max_rel || i == 0) {
      g.max_rel = std::max(g.max_rel, rel);
      g.worst = i;
      g.analytic = analytic[i];
      g.numeric = numeric[i];
    }
  }
  return g;
}

GradCheckReport run_check(Target& t, const std::string& probe_name, Tensor<double> x, double tolerance, double eps,
                          Rng& rng) {
  Tensor<double> y;
  t.forward(x, y);
  Tensor<double> mask(y.shape());
  randomize(mask.values(), rng, -1.0, 1.0);

  auto probe = [&]() {
    Tensor<double> out;
    t.forward(x, out);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * mask[i];
    return s;
  };

  t.zero_grad();
  t.forward(x, y);
  Tensor<double> gx;
  t.backward(x, y, mask, &gx);

  GradCheckReport r;
  r.probe = probe_name;
  r.tolerance = tolerance;

  auto numeric_over = [&](std::span<double> v) {
    std::vector<double> g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + eps;
      const double up = probe();
      v[i] = keep - eps;
      const double down = probe();
      v[i] = keep;
      g[i] = (up - down) / (2.0 * eps);
    }
    return g;
  };

  r.groups.push_back(compare("input", gx.values(), numeric_over(x.values())));
  for (auto& p : t.params) {
    const std::vector<double> analytic(p.grad.begin(), p.grad.end());
    r.groups.push_back(compare(p.name, analytic, numeric_over(p.value)));
  }
  return r;
}

std::string describe(const Layer<double>& layer) {
  const Shape& s = layer.input().shape;
  return format_layer(layer.spec()) + " in=" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

}  // namespace

GradCheckReport check_layer(Layer<double>& layer, int batch, double tolerance, Rng& rng, double eps) {
  Target t;
  t.forward = [&](const Tensor<double>& x, Tensor<double>& y) { layer.forward(x, y); };
  t.backward = [&](const Tensor<double>& x, const Tensor<double>& y, const Tensor<double>& gy, Tensor<double>* gx) {
    layer.backward(x, y, gy, gx);
  };
  t.zero_grad = [&] { layer.zero_grad(); };
  t.params = layer.params();
  randomize_params(t.params, rng);

  const LayerKind kind = layer.kind();
  const bool relu = kind == LayerKind::relu || kind == LayerKind::qrelu;
  const bool maxp = kind == LayerKind::max_pool || kind == LayerKind::qmax_pool;
  Tensor<double> x(layer.input().shape.with_batch(batch));
  for (int attempt = 0;; ++attempt) {
    if (attempt > 10000) throw std::runtime_error("could not sample a kink-free input for " + describe(layer));
    randomize(x.values(), rng, -1.0, 1.0);
    if (relu && !away_from_zero(x)) continue;
    if (maxp && !pool_windows_untied(x, layer.spec().kernel)) continue;
    break;
  }
  return run_check(t, describe(layer), std::move(x), tolerance, eps, rng);
}

GradCheckReport check_network(Network<double>& net, int batch, double tolerance, Rng& rng, double eps) {
  Target t;
  t.forward = [&](const Tensor<double>& x, Tensor<double>& y) { y = net.forward(x); };
  t.backward = [&](const Tensor<double>& x, const Tensor<double>&, const Tensor<double>& gy, Tensor<double>* gx) {
    net.forward(x);
    net.backward(gy, gx);
  };
  t.zero_grad = [&] { net.zero_grad(); };
  t.params = net.params();
  randomize_params(t.params, rng);
  Tensor<double> x(net.input_shape().with_batch(batch));
  randomize(x.values(), rng, 0.0, 1.0);
  return run_check(t, "network " + net.spec().name, std::move(x), tolerance, eps, rng);
}

GradCheckReport check_softmax_cross_entropy(int batch, int classes, double tolerance, Rng& rng, double eps) {
  Tensor<double> logits(Shape{batch, classes, 1, 1});
  randomize(logits.values(), rng, -3.0, 3.0);
  std::vector<int> labels;
  for (int i = 0; i < batch; ++i) labels.push_back(int(below(rng, std::uint64_t(classes))));
  const auto analytic = softmax_cross_entropy<double>(logits, labels).grad;
  const auto numeric = finite_diff_grad(
      [&](std::span<const double> z) {
        return softmax_cross_entropy<double>(Tensor<double>(logits.shape(), {z.begin(), z.end()}), labels).loss;
      },
      logits.values(), eps);
  GradCheckReport r;
  r.probe = "softmax + cross-entropy " + std::to_string(batch) + "x" + std::to_string(classes);
  r.tolerance = tolerance;
  r.groups.push_back(compare("logits", analytic, numeric));
  return r;
}

GradCheckReport check_mse(int count, double tolerance, Rng& rng, double eps) {
  std::vector<double> out(static_cast<std::size_t>(count)), target(static_cast<std::size_t>(count));
  randomize(out, rng, 0.0, 1.0);
  randomize(target, rng, 0.0, 1.0);
  const auto analytic = mse_loss<double>(out, target).grad;
  const auto numeric =
      finite_diff_grad([&](std::span<const double> o) { return mse_loss<double>(o, target).loss; }, out, eps);
  GradCheckReport r;
  r.probe = "mse " + std::to_string(count);
  r.tolerance = tolerance;
  r.groups.push_back(compare("output", analytic, numeric));
  return r;
}

namespace {

struct LayerCase {
  LayerSpec spec;
  LayerShape in;
  int batch = 1;
};

LayerSpec make(LayerKind kind, int units = 0, int kernel = 1, int stride = 1, Padding pad = Padding::same,
               bool bias = false) {
  LayerSpec s;
  s.kind = kind;
  s.units = units;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = pad;
  s.bias = bias;
  return s;
}

LayerShape q(int channels, int h, int w) { return {Shape{1, 3 * channels, h, w}, Domain::quaternion}; }
LayerShape r(int channels, int h, int w) { return {Shape{1, channels, h, w}, Domain::real}; }

std::vector<LayerCase> layer_cases() {
  using K = LayerKind;
  return {
      {make(K::qconv, 3, 3, 1, Padding::valid), q(2, 8, 8), 1},
      {make(K::qconv, 2, 3, 2, Padding::same), q(2, 7, 7), 2},
      {make(K::qconv_transpose, 2, 3, 2, Padding::same), q(2, 4, 4), 1},
      {make(K::qconv_transpose, 2, 2, 1, Padding::valid), q(1, 5, 5), 2},
      {make(K::qdense, 5), q(12, 1, 1), 2},
      {make(K::qmax_pool, 0, 2), q(2, 8, 8), 1},
      {make(K::qavg_pool, 0, 2), q(2, 8, 8), 1},
      {make(K::qrelu), q(2, 4, 4), 2},
      {make(K::conv, 4, 3, 1, Padding::same, true), r(3, 6, 6), 2},
      {make(K::conv, 3, 3, 2, Padding::valid, false), r(2, 7, 7), 1},
      {make(K::conv_transpose, 3, 3, 2, Padding::same, true), r(2, 4, 4), 1},
      {make(K::dense, 5, 1, 1, Padding::same, true), r(12, 1, 1), 3},
      {make(K::max_pool, 0, 2), r(3, 6, 6), 1},
      {make(K::avg_pool, 0, 2), r(3, 6, 6), 1},
      {make(K::relu), r(3, 4, 4), 2},
      {make(K::tanh), q(2, 3, 3), 2},
      {make(K::upsample, 0, 2), q(1, 3, 3), 1},
      {make(K::flatten), r(3, 2, 2), 2},
      {make(K::flatten_quaternion), q(2, 2, 3), 2},
      {make(K::split), q(2, 2, 2), 1},
  };
}

NetworkSpec mini_hybrid() {
  NetworkSpec s;
  s.name = "mini-hybrid";
  s.input_domain = Domain::quaternion;
  s.in_channels = 3;
  s.in_height = 4;
  s.in_width = 4;
  using K = LayerKind;
  s.layers = {make(K::qconv, 2, 3), make(K::qrelu),      make(K::qmax_pool, 0, 2), make(K::flatten_quaternion),
              make(K::qdense, 4),   make(K::qrelu),      make(K::split),           make(K::dense, 3)};
  return s;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(const SuiteOptions& opts) {
  std::vector<GradCheckReport> out;
  for (const std::uint64_t seed : opts.seeds) {
    Rng rng(seed);
    auto tag = [&](GradCheckReport rep) {
      rep.probe += " [seed " + std::to_string(seed) + "]";
      out.push_back(std::move(rep));
    };
    for (const auto& c : layer_cases()) {
      auto layer = make_layer<double>(c.spec, c.in);
      tag(check_layer(*layer, c.batch, opts.tolerance, rng, opts.eps));
    }
    tag(check_softmax_cross_entropy(3, 10, opts.tolerance, rng, opts.eps));
    tag(check_mse(24, opts.tolerance, rng, opts.eps));
    {
      Network<double> net(mini_hybrid());
      tag(check_network(net, 2, opts.tolerance, rng, opts.eps));
    }
    {
      Network<double> net(preset_denoiser(true, 1.0, 2, 8));
      tag(check_network(net, 1, opts.tolerance, rng, opts.eps));
    }
  }
  return out;
}

std::string format_reports(const std::vector<GradCheckReport>& reports) {
  std::string s;
  char line[512];
  std::snprintf(line, sizeof line, "%-72s %-22s %6s %11s %11s  %s\n", "probe", "group", "n", "max_rel", "max_abs",
                "status");
  s += line;
  for (const auto& r : reports)
    for (const auto& g : r.groups) {
      std::snprintf(line, sizeof line, "%-72s %-22s %6zu %11.3e %11.3e  %s\n", r.probe.c_str(), g.name.c_str(),
                    g.count, g.max_rel, g.max_abs, g.max_rel < r.tolerance ? "ok" : "FAIL");
      s += line;
    }
  return s;
}

}  // namespace qcnn
