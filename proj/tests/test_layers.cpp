#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qcnn/gradcheck.hpp"
#include "qcnn/layers.hpp"
#include "qcnn/random.hpp"

using namespace qcnn;

namespace {

template <class T>
QFeatureMap<T> random_map(int c, int h, int w, Rng& rng) {
  QFeatureMap<T> m(c, h, w);
  for (auto& v : m.tensor().values()) v = T(uniform(rng, -1, 1));
  return m;
}

template <class T>
QConvKernel<T> random_kernel(int k, int c, int l, Rng& rng) {
  QConvKernel<T> ker(k, c, l);
  for (auto& v : ker.s) v = T(uniform(rng, -1, 1));
  for (auto& v : ker.theta) v = T(uniform(rng, -std::numbers::pi, std::numbers::pi));
  return ker;
}

double max_rel(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double d = 0, s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return s == 0 ? d : d / s;
}

// Direct loops over output pixels and taps; same-padding offset is (L-1)/2
// on the leading side (extra padding trails).
Tensor<double> naive_real_conv(const Tensor<double>& x, const Tensor<double>& w, ConvConfig cfg) {
  const int c = x.channels(), h = x.height(), wd = x.width(), k = w.batch(), l = w.height(), s = cfg.stride;
  int oh, ow, pt, pl;
  if (cfg.padding == Padding::same) {
    oh = (h + s - 1) / s;
    ow = (wd + s - 1) / s;
    pt = std::max((oh - 1) * s + l - h, 0) / 2;
    pl = std::max((ow - 1) * s + l - wd, 0) / 2;
  } else {
    oh = (h - l) / s + 1;
    ow = (wd - l) / s + 1;
    pt = pl = 0;
  }
  Tensor<double> y(Shape{1, k, oh, ow});
  for (int o = 0; o < k; ++o)
    for (int yy = 0; yy < oh; ++yy)
      for (int xx = 0; xx < ow; ++xx) {
        double acc = 0;
        for (int ch = 0; ch < c; ++ch)
          for (int ky = 0; ky < l; ++ky)
            for (int kx = 0; kx < l; ++kx) {
              const int iy = yy * s + ky - pt, ix = xx * s + kx - pl;
              if (iy >= 0 && iy < h && ix >= 0 && ix < wd) acc += w.at(o, ch, ky, kx) * x.at(0, ch, iy, ix);
            }
        y.at(0, o, yy, xx) = acc;
      }
  return y;
}

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("qconv2d equals the Hamilton-product oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
      // Larger channel counts and 3x3/5x5 kernels run the stride-1 fast path.
      const bool wide = trial % 3 == 0;
      const int c = wide ? 8 + int(below(rng, 4)) : 1 + int(below(rng, 3));
      const int k = wide ? 8 + int(below(rng, 4)) : 1 + int(below(rng, 3));
      const int l = 1 + 2 * int(below(rng, 3));
      const int h = l + int(below(rng, 12)), w = l + int(below(rng, 12));
      const ConvConfig cfg{1 + int(below(rng, 2)), below(rng, 2) ? Padding::same : Padding::valid};
      const auto x = random_map<double>(c, h, w, rng);
      const auto ker = random_kernel<double>(k, c, l, rng);
      const auto fast = qconv2d_forward(x, ker, cfg);
      const auto ref = oracle_qconv(x, ker, cfg);
      REQUIRE(fast.tensor().shape() == ref.tensor().shape());
      INFO("trial ", trial, " c=", c, " k=", k, " l=", l, " stride=", cfg.stride);
      CHECK(max_rel(fast.tensor().values(), ref.tensor().values()) < 1e-12);
    }
  }

  TEST_CASE("real conv equals direct loops, including even kernels") {
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
      const int c = 1 + int(below(rng, 12)), k = 1 + int(below(rng, 12)), l = 1 + int(below(rng, 5));
      const int h = l + int(below(rng, 10)), w = l + int(below(rng, 10));
      const ConvConfig cfg{1 + int(below(rng, 3)), below(rng, 2) ? Padding::same : Padding::valid};
      Tensor<double> x(Shape{1, c, h, w}), wt(Shape{k, c, l, l});
      for (auto& v : x.values()) v = uniform(rng, -1, 1);
      for (auto& v : wt.values()) v = uniform(rng, -1, 1);
      const auto y = real_conv2d(x, wt, std::span<const double>{}, cfg);
      const auto ref = naive_real_conv(x, wt, cfg);
      REQUIRE(y.shape() == ref.shape());
      INFO("trial ", trial, " c=", c, " k=", k, " l=", l, " stride=", cfg.stride);
      CHECK(max_rel(y.values(), ref.values()) < 1e-13);
    }
  }

  TEST_CASE("real conv bias adds per output channel") {
    Tensor<double> x(Shape{1, 1, 3, 3}, 0.0), w(Shape{2, 1, 1, 1}, 1.0);
    const std::vector<double> b{0.5, -2.0};
    const auto y = real_conv2d(x, w, std::span<const double>(b), {});
    CHECK(y.at(0, 0, 1, 1) == 0.5);
    CHECK(y.at(0, 1, 2, 0) == -2.0);
  }

  TEST_CASE("transposed qconv is qconv of the zero-inserted, padded input with the flipped kernel") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const int c = 1 + int(below(rng, 3)), k = 1 + int(below(rng, 3)), l = 1 + int(below(rng, 3));
      const int h = 2 + int(below(rng, 5)), w = 2 + int(below(rng, 5)), s = 1 + int(below(rng, 2));
      const auto x = random_map<double>(c, h, w, rng);
      const auto ker = random_kernel<double>(k, c, l, rng);
      const auto y = qconv_transpose2d_forward(x, ker, {s, Padding::valid});
      QFeatureMap<double> big(c, (h - 1) * s + 1 + 2 * (l - 1), (w - 1) * s + 1 + 2 * (l - 1));
      for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < 3; ++p)
          for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < w; ++xx) big.at(ch, p, l - 1 + yy * s, l - 1 + xx * s) = x.at(ch, p, yy, xx);
      QConvKernel<double> flipped = ker;
      for (int o = 0; o < k; ++o)
        for (int ch = 0; ch < c; ++ch)
          for (int ky = 0; ky < l; ++ky)
            for (int kx = 0; kx < l; ++kx) {
              const auto src = ker.index(o, ch, l - 1 - ky, l - 1 - kx), dst = ker.index(o, ch, ky, kx);
              flipped.s[dst] = ker.s[src];
              flipped.theta[dst] = ker.theta[src];
            }
      const auto ref = oracle_qconv(big, flipped, {1, Padding::valid});
      REQUIRE(y.tensor().shape() == ref.tensor().shape());
      CHECK(y.height() == (h - 1) * s + l);
      CHECK(max_rel(y.tensor().values(), ref.tensor().values()) < 1e-12);
      CHECK(qconv_transpose2d_forward(x, ker, {s, Padding::same}).height() == h * s);
    }
  }

  TEST_CASE("grayscale input reduces qconv to real conv with weights s") {
    Rng rng(14);
    for (int trial = 0; trial < 10; ++trial) {
      const int c = 1 + int(below(rng, 10)), k = 1 + int(below(rng, 10));
      Tensor<double> g(Shape{1, c, 9, 7});
      for (auto& v : g.values()) v = uniform01(rng);
      QFeatureMap<double> q(c, 9, 7);
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 9; ++y)
          for (int x = 0; x < 7; ++x)
            for (int p = 0; p < 3; ++p) q.at(ch, p, y, x) = g.at(0, ch, y, x);
      const auto ker = random_kernel<double>(k, c, 3, rng);
      const auto qy = qconv2d_forward(q, ker, {1, Padding::same});
      const auto ry = real_conv2d(g, Tensor<double>(Shape{k, c, 3, 3}, ker.s), std::span<const double>{}, {1, Padding::same});
      for (int o = 0; o < k; ++o)
        for (int p = 0; p < 3; ++p)
          for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 7; ++x) CHECK(qy.at(o, p, y, x) == doctest::Approx(ry.at(0, o, y, x)).epsilon(1e-12).scale(1));
    }
  }

  TEST_CASE("part sums do not depend on the angles") {
    Rng rng(15);
    const auto x = random_map<double>(3, 6, 6, rng);
    auto ker = random_kernel<double>(4, 3, 3, rng);
    const auto a = qconv2d_forward(x, ker, {1, Padding::same});
    for (auto& t : ker.theta) t += uniform(rng, -3, 3);
    const auto b = qconv2d_forward(x, ker, {1, Padding::same});
    for (int o = 0; o < 4; ++o)
      for (int y = 0; y < 6; ++y)
        for (int xx = 0; xx < 6; ++xx) {
          const double sa = a.at(o, 0, y, xx) + a.at(o, 1, y, xx) + a.at(o, 2, y, xx);
          const double sb = b.at(o, 0, y, xx) + b.at(o, 1, y, xx) + b.at(o, 2, y, xx);
          CHECK(sa == doctest::Approx(sb).epsilon(1e-12).scale(1));
        }
  }

  TEST_CASE("float and double engines agree") {
    Rng rng(16);
    const auto xd = random_map<double>(9, 12, 10, rng);
    const auto kd = random_kernel<double>(10, 9, 3, rng);
    QFeatureMap<float> xf(9, 12, 10);
    for (std::size_t i = 0; i < xf.tensor().size(); ++i) xf.tensor()[i] = float(xd.tensor()[i]);
    QConvKernel<float> kf(10, 9, 3);
    for (std::size_t i = 0; i < kf.s.size(); ++i) {
      kf.s[i] = float(kd.s[i]);
      kf.theta[i] = float(kd.theta[i]);
    }
    const auto yd = qconv2d_forward(xd, kd, {1, Padding::same});
    const auto yf = qconv2d_forward(xf, kf, {1, Padding::same});
    std::vector<double> f(yf.tensor().values().begin(), yf.tensor().values().end());
    CHECK(max_rel(f, yd.tensor().values()) < 1e-5);
  }

  TEST_CASE("qdense rotates and scales each input") {
    QDenseKernel<double> k(1, 2);
    k.s = {2.0, 0.5};
    k.theta = {0.3, -1.1};
    QVector<double> x(2);
    x.at(0, 0) = 0.2, x.at(0, 1) = -0.4, x.at(0, 2) = 0.9;
    x.at(1, 0) = 1.0, x.at(1, 1) = 0.0, x.at(1, 2) = -0.5;
    const auto y = qdense_forward(x, k);
    const ColorVector a = apply_color_rotation(2.0, 0.3, {0.2, -0.4, 0.9});
    const ColorVector b = apply_color_rotation(0.5, -1.1, {1.0, 0.0, -0.5});
    CHECK(y.at(0, 0) == doctest::Approx(a.r + b.r));
    CHECK(y.at(0, 1) == doctest::Approx(a.g + b.g));
    CHECK(y.at(0, 2) == doctest::Approx(a.b + b.b));
  }

  TEST_CASE("pooling works per part with first-max tie breaking") {
    QFeatureMap<double> x(1, 2, 4);
    const double vals[3][2][4] = {{{1, 5, 2, 2}, {3, 4, 2, 2}}, {{0, 0, -1, -3}, {0, 0, -2, -4}}, {{9, 1, 1, 1}, {1, 1, 1, 8}}};
    for (int p = 0; p < 3; ++p)
      for (int y = 0; y < 2; ++y)
        for (int xx = 0; xx < 4; ++xx) x.at(0, p, y, xx) = vals[p][y][xx];
    const auto mp = qmaxpool2d(x, 2);
    CHECK(mp.out.at(0, 0, 0, 0) == 5);
    CHECK(mp.out.at(0, 0, 0, 1) == 2);
    CHECK(mp.out.at(0, 1, 0, 1) == -1);
    CHECK(mp.out.at(0, 2, 0, 1) == 8);
    QFeatureMap<double> g(1, 1, 2);
    for (auto& v : g.tensor().values()) v = 1.0;
    const auto gx = qmaxpool2d_backward(x, mp, g);
    CHECK(gx.at(0, 0, 0, 1) == 1.0);
    CHECK(gx.at(0, 0, 0, 2) == 1.0);  // tie: first element in row-major order
    CHECK(gx.at(0, 0, 0, 3) == 0.0);
    CHECK(gx.at(0, 1, 0, 0) == 1.0);
    CHECK(gx.at(0, 1, 0, 1) == 0.0);
    const auto ap = qavgpool2d(x, 2);
    CHECK(ap.at(0, 0, 0, 0) == doctest::Approx(13.0 / 4));
    CHECK(ap.at(0, 2, 0, 1) == doctest::Approx(11.0 / 4));
    const auto ag = qavgpool2d_backward(x, g, 2);
    CHECK(ag.at(0, 1, 1, 3) == 0.25);
  }

  TEST_CASE("relu, tanh and softmax") {
    QFeatureMap<double> x(1, 1, 2);
    x.at(0, 0, 0, 0) = -1, x.at(0, 1, 0, 0) = 2, x.at(0, 2, 0, 1) = -0.0;
    const auto r = qrelu(x);
    CHECK(r.at(0, 0, 0, 0) == 0);
    CHECK(r.at(0, 1, 0, 0) == 2);
    Tensor<double> t(Shape{1, 2, 1, 1}, std::vector<double>{0.0, 1.0});
    const auto th = tanh_activation(t);
    CHECK(th[1] == doctest::Approx(std::tanh(1.0)));
    const std::vector<double> logits{1000.0, 1001.0, 999.0};
    const auto p = softmax_head<double>(logits);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
    CHECK(p[1] > p[0]);
    CHECK(std::isfinite(p[2]));
  }

  TEST_CASE("batched layer forward equals per-sample forward") {
    Rng rng(17);
    const LayerSpec spec{LayerKind::qconv, 9, 3, 1, Padding::same};
    const LayerShape in{{1, 27, 11, 13}, Domain::quaternion};
    auto layer = make_layer<double>(spec, in);
    for (auto& p : layer->params())
      for (auto& v : p.value) v = uniform(rng, -1, 1);
    Tensor<double> x(Shape{3, 27, 11, 13});
    for (auto& v : x.values()) v = uniform(rng, -1, 1);
    const auto y = layer->forward(x);
    for (int n = 0; n < 3; ++n) {
      Tensor<double> one(Shape{1, 27, 11, 13}, std::vector<double>(x.sample(n), x.sample(n) + x.shape().sample_size()));
      const auto yn = layer->forward(one);
      for (std::size_t i = 0; i < yn.size(); ++i) CHECK(yn[i] == y.sample(n)[i]);
    }
    CHECK_THROWS_AS(layer->forward(Tensor<double>(Shape{1, 24, 11, 13})), ShapeError);
  }

  TEST_CASE("layer backward agrees with central differences") {
    Rng rng(18);
    for (const LayerSpec spec : {LayerSpec{LayerKind::qconv, 9, 3, 1, Padding::same},
                                 LayerSpec{LayerKind::qconv_transpose, 2, 3, 2, Padding::same},
                                 LayerSpec{LayerKind::conv, 10, 3, 1, Padding::valid, true}}) {
      const bool q = spec.kind != LayerKind::conv;
      const LayerShape in{{1, q ? 24 : 8, 7, 6}, q ? Domain::quaternion : Domain::real};
      auto layer = make_layer<double>(spec, in);
      const auto report = check_layer(*layer, 2, 1e-4, rng);
      INFO(kind_name(spec.kind), " max rel ", report.max_rel());
      CHECK(report.passed());
    }
  }
}
