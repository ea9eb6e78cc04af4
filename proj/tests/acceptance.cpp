// Acceptance checks, one per criterion. Prints one PASS/FAIL/SKIP line per
// criterion; exit status 0 pass, 1 fail, 77 skip.
//
//   qcnn_acceptance --criterion N     (N = 1..10, or omit for all)

#include <CLI11.hpp>

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <iostream>
#include <sstream>
#include <string>

#include "qcnn/app.hpp"
#include "qcnn/gradcheck.hpp"
#include "qcnn/layers.hpp"
#include "qcnn/quat.hpp"

namespace fs = std::filesystem;
using namespace qcnn;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::skip, std::move(d)}; }
Outcome check(bool ok, std::string d) { return {ok ? Verdict::pass : Verdict::fail, std::move(d)}; }

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

// max |a - b| / max |b|
template <class A, class B>
double normwise(const A& a, const B& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    diff = std::max(diff, std::abs(double(a[i]) - double(b[i])));
    scale = std::max(scale, std::abs(double(b[i])));
  }
  return scale == 0.0 ? diff : diff / scale;
}

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "qcnn_acceptance";
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 1 + int(below(rng, 2)), k = 1 + int(below(rng, 3)), l = 1 + int(below(rng, 3));
    const int h = l + int(below(rng, std::uint64_t(9 - l))), w = l + int(below(rng, std::uint64_t(9 - l)));
    const ConvConfig cfg{1 + int(below(rng, 2)), below(rng, 2) ? Padding::same : Padding::valid};
    QFeatureMap<double> x(c, h, w);
    for (auto& v : x.tensor().values()) v = uniform(rng, -1, 1);
    QConvKernel<double> ker(k, c, l);
    for (auto& v : ker.s) v = uniform(rng, -1, 1);
    for (auto& v : ker.theta) v = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const auto fast = qconv2d_forward(x, ker, cfg);
    const auto ref = oracle_qconv(x, ker, cfg);
    worst = std::max(worst, normwise(fast.tensor().values(), ref.tensor().values()));
  }
  return check(worst < 1e-10, "100 random instances, max normwise relative error " + sci(worst) + " (< 1e-10)");
}

Outcome criterion2() {
  Rng rng(202);
  double orth = 0.0, det_err = 0.0, fix = 0.0, sums = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 m = rotation_matrix(uniform(rng, -4 * std::numbers::pi, 4 * std::numbers::pi));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double g = 0.0;
        for (int r = 0; r < 3; ++r) g += m[r][a] * m[r][b];
        orth = std::max(orth, std::abs(g - (a == b)));
      }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    det_err = std::max(det_err, std::abs(det - 1.0));
    const Vec3 g = mat_vec(m, {1, 1, 1});
    for (double v : g) fix = std::max(fix, std::abs(v - 1.0));
    for (int r = 0; r < 3; ++r) {
      sums = std::max(sums, std::abs(m[r][0] + m[r][1] + m[r][2] - 1.0));
      sums = std::max(sums, std::abs(m[0][r] + m[1][r] + m[2][r] - 1.0));
    }
  }
  const double worst = std::max({orth, det_err, fix, sums});
  return check(worst <= 1e-12, "1000 angles: |M^T M - I| " + sci(orth) + ", |det - 1| " + sci(det_err) + ", |M 1 - 1| " +
                                   sci(fix) + ", row/col sums " + sci(sums) + " (<= 1e-12)");
}

Outcome criterion3() {
  const auto reports = run_gradcheck_suite();
  std::size_t ok = 0;
  double worst = 0.0;
  std::string failed;
  for (const auto& r : reports) {
    ok += r.passed();
    worst = std::max(worst, r.max_rel());
    if (!r.passed()) failed += " " + r.probe;
  }
  return check(ok == reports.size(), std::to_string(ok) + "/" + std::to_string(reports.size()) +
                                         " probes (3 seeds, eps 1e-5), max relative error " + sci(worst) +
                                         " (< 1e-4)" + (failed.empty() ? "" : "; failed:" + failed));
}

Outcome criterion4() {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + int(below(rng, 3)), k = 1 + int(below(rng, 4)), l = 1 + 2 * int(below(rng, 2));
    const int h = 4 + int(below(rng, 9)), w = 4 + int(below(rng, 9));
    const ConvConfig cfg{1 + int(below(rng, 2)), below(rng, 2) ? Padding::same : Padding::valid};
    Tensor<float> gray(Shape{1, c, h, w});
    for (auto& v : gray.values()) v = float(uniform01(rng));
    QFeatureMap<float> q(c, h, w);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int p = 0; p < 3; ++p) q.at(ch, p, y, x) = gray.at(0, ch, y, x);
    QConvKernel<float> ker(k, c, l);
    for (auto& v : ker.s) v = float(uniform(rng, -1, 1));
    for (auto& v : ker.theta) v = float(uniform(rng, -std::numbers::pi, std::numbers::pi));
    const auto qy = qconv2d_forward(q, ker, cfg);
    const Tensor<float> weights(Shape{k, c, l, l}, ker.s);
    const Tensor<float> ry = real_conv2d(gray, weights, std::span<const float>{}, cfg);
    std::vector<float> expect, got;
    for (int kk = 0; kk < k; ++kk)
      for (int p = 0; p < 3; ++p)
        for (int y = 0; y < ry.height(); ++y)
          for (int x = 0; x < ry.width(); ++x) {
            got.push_back(qy.at(kk, p, y, x));
            expect.push_back(ry.at(0, kk, y, x));
          }
    worst = std::max(worst, normwise(got, expect));
  }
  return check(worst < 1e-6, "50 grayscale instances (single precision), every part equals real conv with weights s: "
                             "max normwise relative error " + sci(worst) + " (< 1e-6)");
}

Outcome criterion5() {
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + int(below(rng, 3)), k = 1 + int(below(rng, 4)), l = 1 + 2 * int(below(rng, 2));
    const int h = 4 + int(below(rng, 9)), w = 4 + int(below(rng, 9));
    const ConvConfig cfg{1 + int(below(rng, 2)), below(rng, 2) ? Padding::same : Padding::valid};
    QFeatureMap<float> x(c, h, w);
    for (auto& v : x.tensor().values()) v = float(uniform01(rng));
    QConvKernel<float> ker(k, c, l);
    for (auto& v : ker.s) v = float(uniform(rng, -1, 1));
    for (auto& v : ker.theta) v = float(uniform(rng, -std::numbers::pi, std::numbers::pi));
    auto part_sums = [&](const QConvKernel<float>& kk) {
      const auto y = qconv2d_forward(x, kk, cfg);
      std::vector<double> s;
      for (int o = 0; o < k; ++o)
        for (int yy = 0; yy < y.height(); ++yy)
          for (int xx = 0; xx < y.width(); ++xx)
            s.push_back(double(y.at(o, 0, yy, xx)) + y.at(o, 1, yy, xx) + y.at(o, 2, yy, xx));
      return s;
    };
    const auto base = part_sums(ker);
    for (int rep = 0; rep < 5; ++rep) {
      QConvKernel<float> moved = ker;
      for (auto& v : moved.theta) v += float(uniform(rng, -std::numbers::pi, std::numbers::pi));
      worst = std::max(worst, normwise(part_sums(moved), base));
    }
  }
  return check(worst < 1e-5, "50 instances x 5 random angle perturbations: per-pixel part sums change by at most " +
                                 sci(worst) + " relative (< 1e-5)");
}

Outcome criterion6() {
  std::vector<std::string> notes;
  bool ok = true;
  // Per-layer formulas, checked against the audit table for every preset.
  int layers = 0;
  for (const std::string preset : {"shallow-cifar", "denoiser", "vgg-s"})
    for (const bool q : {false, true}) {
      RunConfig cfg;
      cfg.preset = preset;
      cfg.quaternion = q;
      std::ostringstream audit;
      run_audit(cfg, audit);
      const NetworkSpec spec = make_preset(preset, q, cfg.resolved_filter_ratio());
      const auto shapes = infer_shapes(spec);
      LayerShape in{spec.input_shape(), spec.input_domain};
      std::istringstream lines(audit.str());
      std::string line;
      std::getline(lines, line);
      std::getline(lines, line);
      for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        std::getline(lines, line);
        const bool qc = l.kind == LayerKind::qconv || l.kind == LayerKind::qconv_transpose;
        const bool rc = l.kind == LayerKind::conv || l.kind == LayerKind::conv_transpose;
        if (qc || rc) {
          const std::int64_t K = l.units, C = qc ? in.shape.c / 3 : in.shape.c, L = l.kernel;
          const std::int64_t expect = (qc ? 2 : 1) * K * C * L * L + (l.bias ? K : 0);
          std::istringstream fields(line);
          std::vector<std::string> f{std::istream_iterator<std::string>(fields), {}};
          const std::int64_t reported = f.size() >= 2 ? std::stoll(f[f.size() - 2]) : -1;
          ++layers;
          if (reported != expect) {
            ok = false;
            notes.push_back(preset + " layer " + std::to_string(i) + ": audit " + std::to_string(reported) + " != " +
                            std::to_string(expect));
          }
        }
        in = shapes[i];
      }
    }
  notes.insert(notes.begin(), std::to_string(layers) + " conv layers match 2KCL^2 / KCL^2 exactly");

  const NetworkSpec real_spec = preset_shallow_cifar(false), quat_spec = preset_shallow_cifar(true, 1.0);
  const auto real = conv_cost(real_spec);
  const auto quat = conv_cost(quat_spec);
  const bool doubled = quat.params == 2 * real.params;
  ok = ok && doubled;
  // The same comparison without the input layer, whose C differs (1 quaternion vs 3 real channels).
  auto first_conv = [](const NetworkSpec& s) {
    return count_params_and_mults(s.layers.front(), {s.input_shape(), s.input_domain}).params;
  };
  const std::int64_t real_rest = real.params - first_conv(real_spec), quat_rest = quat.params - first_conv(quat_spec);
  notes.push_back("shallow-cifar conv params at equal widths: quaternion " + std::to_string(quat.params) + " vs 2 x real " +
                  std::to_string(2 * real.params) +
                  (doubled ? " (exact)" : " (NOT exact: the RGB input is 1 quaternion channel vs 3 real channels)") +
                  ", excluding the input layer " + std::to_string(quat_rest) + " vs " + std::to_string(2 * real_rest) +
                  (quat_rest == 2 * real_rest ? " (exact)" : " (NOT exact)"));

  for (const std::string preset : {"shallow-cifar", "denoiser"}) {
    const double r = 1.0 / std::sqrt(2.0);
    const auto rt = total_cost(make_preset(preset, false, 1.0)), qt = total_cost(make_preset(preset, true, r));
    const auto rc = conv_cost(make_preset(preset, false, 1.0)), qc = conv_cost(make_preset(preset, true, r));
    const double dt = std::abs(double(qt.params) / double(rt.params) - 1.0);
    const double dc = std::abs(double(qc.params) / double(rc.params) - 1.0);
    const bool gating = preset == "shallow-cifar";
    if (gating) ok = ok && dt <= 0.02;
    notes.push_back(preset + " at ratio 1/sqrt(2): total params " + std::to_string(qt.params) + " vs " +
                    std::to_string(rt.params) + " (" + sci(100 * dt) + "%" + (gating ? ", <= 2%" : ", informational") +
                    "), conv " + std::to_string(qc.params) + " vs " + std::to_string(rc.params) + " (" + sci(100 * dc) + "%)");
  }
  std::string d;
  for (const auto& n : notes) d += (d.empty() ? "" : "; ") + n;
  return check(ok, d);
}

Outcome criterion7() {
  RunConfig cfg;
  cfg.command = "train";
  if (resolve_cifar_dir(cfg).empty()) return skip("CIFAR-10 not found (set QCNN_CIFAR10_DIR to the binary batches)");
  cfg.preset = "shallow-cifar";
  cfg.quaternion = true;
  cfg.subset = 64;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.optimizer = "rmsprop";
  cfg.lr = 1e-4;
  cfg.eval_split = "train";
  cfg.seed = 7;
  cfg.quiet = true;
  cfg.csv = (work_dir() / "overfit.csv").string();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = run_train(cfg, std::cout);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return check(r.train_accuracy >= 0.95, "quaternion shallow-cifar on 64 images, 200 epochs RMSProp lr 1e-4: train accuracy " +
                                             sci(r.train_accuracy) + " (>= 0.95), " + sci(secs) + " s");
}

Outcome criterion8() {
  RunConfig base;
  base.command = "train";
  if (resolve_cifar_dir(base).empty()) return skip("CIFAR-10 not found (set QCNN_CIFAR10_DIR to the binary batches)");
  base.preset = "shallow-cifar";
  base.subset = 5000;
  base.test_subset = 1000;
  base.epochs = 20;
  base.seed = 8;
  base.quiet = true;
  std::string summary = "model,params,test_accuracy\n", d;
  bool ok = true;
  for (const bool q : {false, true}) {
    RunConfig cfg = base;
    cfg.quaternion = q;
    cfg.csv = (work_dir() / (q ? "classify_quaternion.csv" : "classify_real.csv")).string();
    const TrainResult r = run_train(cfg, std::cout);
    ok = ok && r.final_metric > 0.35;
    summary += std::string(q ? "quaternion" : "real") + "," + std::to_string(r.param_count) + "," + format_number(r.final_metric) + "\n";
    d += std::string(q ? "quaternion " : "real ") + sci(r.final_metric) + " ";
  }
  const fs::path paired = work_dir() / "classify_paired.csv";
  write_text_file(paired, summary);
  return check(ok, "5000/1000 CIFAR-10 subset, 20 epochs, test accuracy: " + d + "(> 0.35); wrote " + paired.string());
}

Outcome criterion9() {
  RunConfig cfg;
  cfg.command = "train";
  cfg.preset = "denoiser";
  cfg.quaternion = true;
  cfg.dataset = QCNN_SOURCE_DIR "/data/denoise_corpus";
  cfg.subset = 200;
  cfg.test_fraction = 0.4;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.seed = 9;
  cfg.quiet = true;
  cfg.csv = (work_dir() / "denoise.csv").string();
  cfg.out = (work_dir() / "denoise.ckpt").string();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = run_train(cfg, std::cout);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double gain = r.final_metric - r.baseline_metric;
  return check(gain >= 5.0, "quaternion denoiser, 200 images (120 train / 80 test), 50 epochs: test PSNR " +
                                sci(r.final_metric) + " dB vs corrupted baseline " + sci(r.baseline_metric) + " dB, gain " +
                                sci(gain) + " dB (>= 5), " + sci(secs / 60) + " min");
}

Outcome criterion10() {
  const fs::path dir = work_dir() / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // Two identical CLI runs.
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    std::ostringstream out, err;
    const int rc = run_cli({"train", "--preset", "denoiser", "--quaternion", "--dataset", QCNN_SOURCE_DIR "/data/denoise_corpus",
                            "--subset", "6", "--epochs", "2", "--batch-size", "2", "--seed", "10", "--no-wall-time", "--quiet",
                            "--csv", (dir / ("run" + tag + ".csv")).string(), "--out", (dir / ("run" + tag + ".ckpt")).string()},
                           out, err);
    if (rc != 0) return fail("train run " + tag + " exited " + std::to_string(rc) + ": " + err.str());
    std::ifstream in(dir / ("run" + tag + ".csv"), std::ios::binary);
    csv[run] = {std::istreambuf_iterator<char>(in), {}};
  }
  const bool same_csv = !csv[0].empty() && csv[0] == csv[1];

  // Save/load round trip: outputs of the in-memory network against the reloaded one.
  bool same_outputs = true;
  for (const bool dbl : {false, true}) {
    auto round_trip = [&](auto tag) {
      using T = decltype(tag);
      Network<T> net(preset_denoiser(true, 1.0 / std::sqrt(2.0), 8, 32));
      init_network(net, 11);
      Tensor<T> x(net.input_shape().with_batch(2));
      Rng rng(12);
      for (auto& v : x.values()) v = T(uniform01(rng));
      const Tensor<T> before = net.predict(x);
      const fs::path p = dir / (dbl ? "rt64.ckpt" : "rt32.ckpt");
      save_checkpoint<T>(p, net, nullptr, 11);
      auto ck = load_checkpoint<T>(p);
      const Tensor<T> after = ck.network->predict(x);
      return before.storage() == after.storage();
    };
    same_outputs = same_outputs && (dbl ? round_trip(double{}) : round_trip(float{}));
  }
  // Evaluating both checkpoints from the CLI runs.
  RunConfig ev;
  ev.dataset = QCNN_SOURCE_DIR "/data/denoise_corpus";
  std::ostringstream sink;
  ev.checkpoint = (dir / "run0.ckpt").string();
  const EvalResult a = run_eval(ev, sink);
  ev.checkpoint = (dir / "run1.ckpt").string();
  const EvalResult b = run_eval(ev, sink);
  const bool same_eval = !a.outputs.empty() && a.outputs == b.outputs && a.metric == b.metric;
  return check(same_csv && same_outputs && same_eval,
               std::string("seeded reruns: CSV ") + (same_csv ? "byte-identical" : "DIFFERENT") +
                   ", checkpoint evals " + (same_eval ? "bit-identical" : "DIFFERENT") + "; save/load outputs (float32, float64) " +
                   (same_outputs ? "bit-identical" : "DIFFERENT"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  Outcome (*const table[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0, skips = 0, ran = 0;
  for (int i = 1; i <= 10; ++i) {
    if (only && i != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = table[i - 1]();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* word = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("criterion %d: %s  %s  [%.1fs]\n", i, word, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.verdict == Verdict::fail;
    skips += o.verdict == Verdict::skip;
  }
  if (failures) return 1;
  return skips == ran ? 77 : 0;
}
