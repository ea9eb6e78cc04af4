#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qcnn/app.hpp"
#include "qcnn/gradcheck.hpp"
#include "qcnn/simd.hpp"

namespace qcnn {

namespace fs = std::filesystem;

namespace {

// Independent rng streams derived from the run seed.
enum Stream : std::uint64_t { kShuffle = 1, kTrainNoise = 2, kTestNoise = 3, kDenoiseNoise = 4, kTrainEvalNoise = 5 };

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string manifest_value(const std::map<std::string, std::string>& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw FormatError("checkpoint manifest lacks '" + key + "'");
  return it->second;
}

template <class T>
double mean_psnr(Network<T>& net, const Tensor<T>& inputs, const std::vector<Image>& clean, Tensor<T>* outputs = nullptr) {
  const Tensor<T> out = predict_all(net, inputs, 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) sum += psnr(batch_to_image(out, int(i)), clean[i]);
  if (outputs) *outputs = out;
  return sum / double(clean.size());
}

double mean_pair_psnr(const std::vector<Image>& a, const std::vector<Image>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += psnr(a[i], b[i]);
  return sum / double(a.size());
}

std::vector<Image> corrupt_all(const std::vector<Image>& clean, Rng& rng, const RunConfig& cfg) {
  std::vector<Image> out;
  out.reserve(clean.size());
  for (const auto& img : clean) out.push_back(corrupt(img, rng, cfg.noise_ratio, cfg.noise_variance));
  return out;
}

std::map<std::string, std::string> run_extras(const RunConfig& cfg, int epochs) {
  return {{"preset", cfg.preset},
          {"quaternion", cfg.quaternion ? "1" : "0"},
          {"filter_ratio", exact(cfg.resolved_filter_ratio())},
          {"task", cfg.is_denoising() ? "denoising" : "classification"},
          {"subset", std::to_string(cfg.subset)},
          {"test_subset", std::to_string(cfg.test_subset)},
          {"test_fraction", exact(cfg.test_fraction)},
          {"noise_ratio", exact(cfg.noise_ratio)},
          {"noise_variance", exact(cfg.noise_variance)},
          {"epochs", std::to_string(epochs)},
          {"batch_size", std::to_string(cfg.batch_size)}};
}

// ---------------------------------------------------------------------------

template <class T>
TrainResult train_classifier(const RunConfig& cfg, Network<T>& net, OptimizerState<T>& opt, std::ostream& log) {
  const std::string dir = resolve_cifar_dir(cfg);
  if (dir.empty()) throw std::runtime_error("no CIFAR-10 data: pass --dataset or set QCNN_CIFAR10_DIR");
  const LabeledImageSet train = load_cifar10(dir, CifarSplit::train, cfg.subset);
  const bool on_test = cfg.eval_split == "test";
  const LabeledImageSet test = on_test ? load_cifar10(dir, CifarSplit::test, cfg.test_subset) : LabeledImageSet{};
  if (!cfg.quiet)
    log << "data: " << train.size() << " training images" << (on_test ? ", " + std::to_string(test.size()) + " test images" : "")
        << " from " << dir << "\n";

  Dataset<T> data{images_to_batch<T>(train.images), train.labels, {}};
  const Tensor<T> test_inputs = on_test ? images_to_batch<T>(test.images) : Tensor<T>{};
  TrainOptions<T> opts;
  opts.loss = LossKind::cross_entropy;
  opts.batch_size = cfg.batch_size;
  opts.micro_batch = cfg.micro_batch;
  if (cfg.augment) {
    const int shift = cfg.max_shift;
    opts.augment = [shift](Tensor<T>& b, Rng& r) { augment_batch(b, r, shift); };
  }

  Rng rng(derive_seed(cfg.seed, kShuffle));
  TrainResult result;
  result.param_count = net.param_count();
  const int epochs = cfg.resolved_epochs();
  for (int e = 1; e <= epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochStats st = train_epoch(net, data, opts, opt, rng);
    const auto pred = on_test ? argmax_rows(predict_all(net, test_inputs)) : argmax_rows(predict_all(net, data.inputs));
    const double acc = accuracy(pred, on_test ? test.labels : train.labels);
    const double wall = cfg.no_wall_time ? 0.0 : seconds_since(t0);
    result.records.push_back({e, st.mean_loss, acc, wall});
    if (!cfg.quiet)
      log << "epoch " << e << "/" << epochs << "  loss " << format_number(st.mean_loss) << "  " << cfg.eval_split
          << "_accuracy " << format_number(acc) << "  " << format_number(seconds_since(t0)) << "s\n";
  }
  result.final_metric = result.records.empty() ? 0.0 : result.records.back().eval_metric;
  result.train_accuracy = accuracy(argmax_rows(predict_all(net, data.inputs)), train.labels);
  if (!cfg.quiet) log << "train_accuracy " << format_number(result.train_accuracy) << "\n";
  return result;
}

template <class T>
TrainResult train_denoiser(const RunConfig& cfg, Network<T>& net, OptimizerState<T>& opt, std::ostream& log) {
  const int size = net.input_shape().h;
  const DenoiseSplit split = load_denoise_split(cfg, size);
  const bool on_test = cfg.eval_split == "test";
  std::vector<Image> eval_clean = on_test ? split.test_clean : split.train_clean;
  std::vector<Image> eval_noisy = split.test_corrupted;
  if (!on_test) {
    Rng r(derive_seed(cfg.seed, kTrainEvalNoise));
    eval_noisy = corrupt_all(eval_clean, r, cfg);
  }
  const Tensor<T> eval_inputs = images_to_batch<T>(eval_noisy);
  TrainResult result;
  result.param_count = net.param_count();
  result.baseline_metric = mean_pair_psnr(eval_noisy, eval_clean);
  if (!cfg.quiet)
    log << "data: " << split.train_clean.size() << " training images, " << split.test_clean.size()
        << " test images from " << cfg.dataset << "\n"
        << "baseline_psnr " << format_number(result.baseline_metric) << " dB (corrupted " << cfg.eval_split
        << " inputs)\n";

  TrainOptions<T> opts;
  opts.loss = LossKind::mse;
  opts.batch_size = cfg.batch_size;
  opts.micro_batch = cfg.micro_batch;
  Rng rng(derive_seed(cfg.seed, kShuffle));
  Rng noise(derive_seed(cfg.seed, kTrainNoise));
  Dataset<T> data;
  data.targets = images_to_batch<T>(split.train_clean);
  const int epochs = cfg.resolved_epochs();
  for (int e = 1; e <= epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    // Fresh corruption of the training images every epoch.
    data.inputs = images_to_batch<T>(corrupt_all(split.train_clean, noise, cfg));
    const EpochStats st = train_epoch(net, data, opts, opt, rng);
    const double p = mean_psnr(net, eval_inputs, eval_clean);
    const double wall = cfg.no_wall_time ? 0.0 : seconds_since(t0);
    result.records.push_back({e, st.mean_loss, p, wall});
    if (!cfg.quiet)
      log << "epoch " << e << "/" << epochs << "  loss " << format_number(st.mean_loss) << "  " << cfg.eval_split
          << "_psnr " << format_number(p) << " dB  " << format_number(seconds_since(t0)) << "s\n";
  }
  result.final_metric = result.records.empty() ? mean_psnr(net, eval_inputs, eval_clean) : result.records.back().eval_metric;
  return result;
}

template <class T>
TrainResult train_impl(const RunConfig& cfg, std::ostream& log) {
  const NetworkSpec spec = make_preset(cfg.preset, cfg.quaternion, cfg.resolved_filter_ratio());
  Network<T> net(spec);
  init_network(net, cfg.seed);
  if (!cfg.quiet) log << run_banner(cfg, net.param_count()) << "\n";
  OptimizerState<T> opt(cfg.optimizer_config());
  TrainResult r = cfg.is_denoising() ? train_denoiser(cfg, net, opt, log) : train_classifier(cfg, net, opt, log);
  if (!cfg.csv.empty()) {
    write_metrics_csv(r.records, cfg.csv);
    if (!cfg.quiet) log << "wrote " << cfg.csv << "\n";
  }
  if (!cfg.out.empty()) {
    if (fs::path(cfg.out).has_parent_path()) fs::create_directories(fs::path(cfg.out).parent_path());
    save_checkpoint(cfg.out, net, &opt, cfg.seed, run_extras(cfg, cfg.resolved_epochs()));
    if (!cfg.quiet) log << "wrote " << cfg.out << "\n";
  }
  return r;
}

// ---------------------------------------------------------------------------

// Task-defining settings come from the checkpoint; the dataset path, split and
// output options from the command line.
RunConfig config_from_manifest(const RunConfig& cfg, const std::map<std::string, std::string>& m) {
  RunConfig c = cfg;
  c.preset = manifest_value(m, "preset");
  c.quaternion = manifest_value(m, "quaternion") == "1";
  c.filter_ratio = std::stod(manifest_value(m, "filter_ratio"));
  c.subset = std::stoull(manifest_value(m, "subset"));
  c.test_subset = std::stoull(manifest_value(m, "test_subset"));
  c.test_fraction = std::stod(manifest_value(m, "test_fraction"));
  c.noise_ratio = std::stod(manifest_value(m, "noise_ratio"));
  c.noise_variance = std::stod(manifest_value(m, "noise_variance"));
  c.seed = std::stoull(manifest_value(m, "seed"));
  return c;
}

template <class T>
EvalResult eval_impl(const RunConfig& cfg, std::ostream& log) {
  Checkpoint<T> ck = load_checkpoint<T>(cfg.checkpoint);
  RunConfig c = config_from_manifest(cfg, ck.manifest);
  Network<T>& net = *ck.network;
  EvalResult r;
  const bool on_test = c.eval_split == "test";
  Tensor<T> out;
  if (c.is_denoising()) {
    r.task = "denoising";
    const DenoiseSplit split = load_denoise_split(c, net.input_shape().h);
    std::vector<Image> clean = on_test ? split.test_clean : split.train_clean;
    std::vector<Image> noisy = split.test_corrupted;
    if (!on_test) {
      Rng rng(derive_seed(c.seed, kTrainEvalNoise));
      noisy = corrupt_all(clean, rng, c);
    }
    r.baseline = mean_pair_psnr(noisy, clean);
    r.metric = mean_psnr(net, images_to_batch<T>(noisy), clean, &out);
    log << "images " << clean.size() << "\nbaseline_psnr " << exact(r.baseline) << "\npsnr " << exact(r.metric) << "\n";
  } else {
    r.task = "classification";
    const std::string dir = resolve_cifar_dir(c);
    if (dir.empty()) throw std::runtime_error("no CIFAR-10 data: pass --dataset or set QCNN_CIFAR10_DIR");
    const LabeledImageSet set = on_test ? load_cifar10(dir, CifarSplit::test, c.test_subset)
                                        : load_cifar10(dir, CifarSplit::train, c.subset);
    out = predict_all(net, images_to_batch<T>(set.images));
    r.metric = accuracy(argmax_rows(out), set.labels);
    log << "images " << set.size() << "\naccuracy " << exact(r.metric) << "\n";
  }
  r.outputs.assign(out.values().begin(), out.values().end());
  return r;
}

template <class T>
std::vector<Image> restore_impl(const std::string& path, const std::vector<Image>& inputs, bool* quaternion) {
  Checkpoint<T> ck = load_checkpoint<T>(path);
  Network<T>& net = *ck.network;
  if (!(net.output_shape().with_batch(1) == net.input_shape().with_batch(1)))
    throw std::invalid_argument(path + " is not an image-to-image model");
  if (quaternion) *quaternion = ck.manifest.count("quaternion") && ck.manifest.at("quaternion") == "1";
  std::vector<Image> out;
  for (std::size_t i = 0; i < inputs.size(); i += 4) {
    const std::size_t n = std::min<std::size_t>(4, inputs.size() - i);
    const Tensor<T> y = net.predict(images_to_batch<T>(std::span<const Image>(inputs.data() + i, n)));
    for (std::size_t j = 0; j < n; ++j) out.push_back(batch_to_image(y, int(j)));
  }
  return out;
}

std::vector<Image> restore(const std::string& path, const std::vector<Image>& inputs, bool* quaternion = nullptr) {
  return checkpoint_precision(path) == "float64" ? restore_impl<double>(path, inputs, quaternion)
                                                 : restore_impl<float>(path, inputs, quaternion);
}

int model_image_size(const std::string& path) {
  const auto ck = checkpoint_precision(path) == "float64" ? load_checkpoint<double>(path).spec : load_checkpoint<float>(path).spec;
  return ck.in_height;
}

}  // namespace

// ---------------------------------------------------------------------------

int RunConfig::resolved_epochs() const { return epochs.value_or(preset == "shallow-cifar" ? 80 : 50); }

double RunConfig::resolved_filter_ratio() const { return filter_ratio.value_or(default_filter_ratio(preset)); }

OptimizerConfig RunConfig::optimizer_config() const {
  OptimizerConfig c;
  const std::string name = optimizer.value_or(preset == "shallow-cifar" ? "rmsprop" : "adam");
  const auto kind = parse_optimizer(name);
  if (!kind) throw std::invalid_argument("unknown optimizer: " + name);
  c.kind = *kind;
  c.lr = lr.value_or(c.kind == OptimizerKind::adam ? 1e-3 : c.kind == OptimizerKind::rmsprop ? 1e-4 : 1e-2);
  c.decay = decay.value_or(c.kind == OptimizerKind::rmsprop ? 1e-6 : 0.0);
  c.rho = rho;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.eps = eps;
  return c;
}

void validate(const RunConfig& cfg) {
  if (!is_preset(cfg.preset)) throw std::invalid_argument("unknown preset: " + cfg.preset);
  if (cfg.precision != "single" && cfg.precision != "double")
    throw std::invalid_argument("precision must be single or double, got " + cfg.precision);
  if (cfg.resolved_epochs() < 0) throw std::invalid_argument("epochs must be non-negative");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (cfg.micro_batch < 0) throw std::invalid_argument("micro batch must be non-negative");
  if (cfg.eval_split != "test" && cfg.eval_split != "train") throw std::invalid_argument("eval split must be test or train");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw std::invalid_argument("test fraction must lie in (0,1)");
  if (cfg.image_format != "png" && cfg.image_format != "ppm") throw std::invalid_argument("image format must be png or ppm");
  if (!(cfg.resolved_filter_ratio() > 0.0)) throw std::invalid_argument("filter ratio must be positive");
  cfg.optimizer_config();
}

std::string run_banner(const RunConfig& cfg, std::int64_t param_count) {
  const OptimizerConfig o = cfg.optimizer_config();
  std::ostringstream s;
  s << "qcnn " << cfg.command << ": preset=" << cfg.preset << " quaternion=" << (cfg.quaternion ? "yes" : "no");
  if (cfg.quaternion) s << " filter_ratio=" << num(cfg.resolved_filter_ratio());
  s << " precision=" << cfg.precision << " seed=" << cfg.seed
    << " epochs=" << cfg.resolved_epochs() << " batch_size=" << cfg.batch_size;
  if (cfg.micro_batch) s << " micro_batch=" << cfg.micro_batch;
  s << " optimizer=" << optimizer_name(o.kind) << " lr=" << num(o.lr) << " decay=" << num(o.decay);
  if (o.kind == OptimizerKind::rmsprop) s << " rho=" << num(o.rho) << " eps=" << num(o.eps);
  if (o.kind == OptimizerKind::adam) s << " beta1=" << num(o.beta1) << " beta2=" << num(o.beta2) << " eps=" << num(o.eps);
  s << " subset=" << cfg.subset;
  if (cfg.is_denoising())
    s << " test_fraction=" << num(cfg.test_fraction) << " noise_ratio=" << num(cfg.noise_ratio)
      << " noise_variance=" << num(cfg.noise_variance);
  else
    s << " test_subset=" << cfg.test_subset << " augment=" << (cfg.augment ? "yes" : "no");
  s << " params=" << param_count << " isa=" << simd::isa_name(simd::active_isa());
  return s.str();
}

TrainResult run_train(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  return cfg.precision == "double" ? train_impl<double>(cfg, log) : train_impl<float>(cfg, log);
}

EvalResult run_eval(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty()) throw std::invalid_argument("eval needs --checkpoint");
  return checkpoint_precision(cfg.checkpoint) == "float64" ? eval_impl<double>(cfg, log) : eval_impl<float>(cfg, log);
}

std::vector<DenoiseReport> run_denoise(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty()) throw std::invalid_argument("denoise needs --checkpoint");
  if (cfg.dataset.empty()) throw std::invalid_argument("denoise needs --dataset <image folder>");
  validate(cfg);
  std::vector<std::string> names;
  const std::vector<Image> images = load_image_folder(cfg.dataset, model_image_size(cfg.checkpoint), &names);
  std::vector<Image> noisy = images;
  if (!cfg.pre_corrupted) {
    Rng rng(derive_seed(cfg.seed, kDenoiseNoise));
    noisy = corrupt_all(images, rng, cfg);
  }
  bool quaternion = false;
  const std::vector<Image> restored = restore(cfg.checkpoint, noisy, &quaternion);

  std::vector<DenoiseReport> reports;
  const double nan = std::nan("");
  for (std::size_t i = 0; i < images.size(); ++i) {
    DenoiseReport r{names[i], nan, nan};
    if (!cfg.pre_corrupted) {
      r.psnr_input = psnr(noisy[i], images[i]);
      r.psnr_output = psnr(restored[i], images[i]);
    }
    reports.push_back(r);
  }
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!cfg.pre_corrupted) write_image(fs::path(cfg.out) / (names[i] + "_noisy." + cfg.image_format), noisy[i]);
      write_image(fs::path(cfg.out) / (names[i] + "_restored." + cfg.image_format), restored[i]);
    }
  }
  if (cfg.pre_corrupted) {
    log << "restored " << reports.size() << " images (inputs taken as already corrupted; no PSNR without clean references)\n";
  } else {
    double in = 0, out = 0;
    for (const auto& r : reports) {
      in += r.psnr_input;
      out += r.psnr_output;
      if (!cfg.quiet) log << r.name << "  input " << format_number(r.psnr_input) << " dB  restored " << format_number(r.psnr_output) << " dB\n";
    }
    log << "mean_psnr_input " << format_number(in / double(reports.size())) << "\nmean_psnr_restored "
        << format_number(out / double(reports.size())) << "\n";
    if (!cfg.csv.empty()) {
      std::string text = "image_id,psnr_input,psnr_output\n";
      for (const auto& r : reports) text += r.name + "," + format_number(r.psnr_input) + "," + format_number(r.psnr_output) + "\n";
      write_text_file(cfg.csv, text);
    }
  }
  if (!cfg.compare.empty()) {
    if (cfg.pre_corrupted) throw std::invalid_argument("--compare needs clean inputs to measure PSNR");
    bool other_quaternion = false;
    const std::vector<Image> other = restore(cfg.compare, noisy, &other_quaternion);
    if (other_quaternion == quaternion)
      throw std::invalid_argument("--compare needs one real and one quaternion model");
    std::vector<PairedRecord> paired;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const double mine = psnr(restored[i], images[i]), theirs = psnr(other[i], images[i]);
      paired.push_back({names[i], mean_saturation(images[i]), mean_gray_angle(images[i]), quaternion ? theirs : mine,
                        quaternion ? mine : theirs});
    }
    const std::string path = cfg.paired_csv.empty() ? "paired.csv" : cfg.paired_csv;
    write_paired_csv(paired, path);
    log << "wrote " << path << "\n";
  }
  return reports;
}

int run_gradcheck(const RunConfig& cfg, std::ostream& log) {
  SuiteOptions opts;
  opts.seeds = {cfg.seed, cfg.seed + 1, cfg.seed + 2};
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_gradcheck_suite(opts);
  log << format_reports(reports);
  std::size_t passed = 0;
  double worst = 0.0;
  for (const auto& r : reports) {
    passed += r.passed();
    worst = std::max(worst, r.max_rel());
  }
  log << "gradcheck: " << passed << "/" << reports.size() << " probes passed, max relative error "
      << format_number(worst) << " (tolerance " << format_number(opts.tolerance) << "), "
      << format_number(seconds_since(t0)) << "s\n";
  return passed == reports.size() ? 0 : 1;
}

void run_audit(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  const NetworkSpec spec = make_preset(cfg.preset, cfg.quaternion, cfg.resolved_filter_ratio());
  const auto shapes = infer_shapes(spec);
  log << "audit " << spec.name << " (" << (cfg.quaternion ? "quaternion, filter_ratio " + num(cfg.resolved_filter_ratio()) : "real")
      << ")\n";
  log << std::left << std::setw(4) << "#" << std::setw(18) << "kind" << std::setw(16) << "input" << std::setw(16)
      << "output" << std::right << std::setw(6) << "K" << std::setw(6) << "C" << std::setw(4) << "L" << std::setw(12)
      << "params" << std::setw(16) << "mults" << "\n";
  LayerShape in{spec.input_shape(), spec.input_domain};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerCost c = count_params_and_mults(l, in);
    const bool conv = l.kind == LayerKind::conv || l.kind == LayerKind::conv_transpose || l.kind == LayerKind::qconv ||
                      l.kind == LayerKind::qconv_transpose;
    const bool q = l.kind == LayerKind::qconv || l.kind == LayerKind::qconv_transpose;
    log << std::left << std::setw(4) << i << std::setw(18) << kind_name(l.kind) << std::setw(16)
        << to_string(in.shape.with_batch(1)) << std::setw(16) << to_string(shapes[i].shape.with_batch(1)) << std::right;
    if (conv)
      log << std::setw(6) << l.units << std::setw(6) << (q ? in.shape.c / 3 : in.shape.c) << std::setw(4) << l.kernel;
    else
      log << std::setw(6) << "-" << std::setw(6) << "-" << std::setw(4) << "-";
    log << std::setw(12) << c.params << std::setw(16) << c.mults << "\n";
    in = shapes[i];
  }
  const LayerCost total = total_cost(spec), conv = conv_cost(spec);
  log << "conv_params " << conv.params << "\nconv_mults " << conv.mults << "\ntotal_params " << total.params
      << "\ntotal_mults " << total.mults << "\n";
}

// ---------------------------------------------------------------------------

std::vector<bool> holdout_mask(std::size_t count, double fraction) {
  std::vector<bool> mask(count);
  for (std::size_t i = 0; i < count; ++i)
    mask[i] = std::floor(double(i + 1) * fraction) > std::floor(double(i) * fraction);
  return mask;
}

DenoiseSplit load_denoise_split(const RunConfig& cfg, int image_size) {
  if (cfg.dataset.empty()) throw std::invalid_argument("denoising needs --dataset <image folder>");
  std::vector<std::string> names;
  std::vector<Image> images = load_image_folder(cfg.dataset, image_size, &names);
  if (cfg.subset && cfg.subset < images.size()) {
    images.resize(cfg.subset);
    names.resize(cfg.subset);
  }
  const auto mask = holdout_mask(images.size(), cfg.test_fraction);
  DenoiseSplit s;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (mask[i]) {
      s.test_clean.push_back(images[i]);
      s.test_names.push_back(names[i]);
    } else {
      s.train_clean.push_back(images[i]);
    }
  }
  if (s.train_clean.empty() || s.test_clean.empty())
    throw std::runtime_error("need at least one training and one test image, got " + std::to_string(images.size()) + " images");
  Rng rng(derive_seed(cfg.seed, kTestNoise));
  s.test_corrupted = corrupt_all(s.test_clean, rng, cfg);
  return s;
}

std::string resolve_cifar_dir(const RunConfig& cfg) {
  std::string dir = cfg.dataset;
  if (dir.empty())
    if (const char* env = std::getenv("QCNN_CIFAR10_DIR")) dir = env;
  if (dir.empty()) return {};
  const fs::path root = find_cifar10(dir);
  return root.empty() ? std::string{} : root.string();
}

}  // namespace qcnn
