#include <CLI11.hpp>

#include <iostream>
#include <ostream>
#include <stdexcept>

#include "qcnn/app.hpp"
#include "qcnn/simd.hpp"

namespace qcnn {

namespace {

struct Flags {
  RunConfig cfg;
  int epochs = 0;
  std::string optimizer;
  double lr = 0, decay = 0, filter_ratio = 0;
  std::string isa;
};

void add_options(CLI::App& app, Flags& f) {
  RunConfig& c = f.cfg;
  const std::vector<std::string> presets{"shallow-cifar", "denoiser", "vgg-s"};
  app.add_option("--preset", c.preset, "Network preset")->check(CLI::IsMember(presets))->capture_default_str();
  app.add_flag("--quaternion,!--real", c.quaternion, "Quaternion layers instead of real ones");
  app.add_option("--filter-ratio", f.filter_ratio, "Quaternion width multiplier (default 1 for shallow-cifar, 1/sqrt(2) otherwise)")
      ->check(CLI::PositiveNumber);
  app.add_option("--precision", c.precision, "single or double")->check(CLI::IsMember({"single", "double"}))->capture_default_str();
  app.add_option("--dataset", c.dataset, "CIFAR-10 batch directory or image folder");
  app.add_option("--subset", c.subset, "Use only the first N training samples (0 = all)")->capture_default_str();
  app.add_option("--test-subset", c.test_subset, "CIFAR-10 test records to evaluate (0 = all)")->capture_default_str();
  app.add_option("--test-fraction", c.test_fraction, "Share of the image folder held out for testing")->capture_default_str();
  app.add_option("--eval", c.eval_split, "Evaluation split")->check(CLI::IsMember({"test", "train"}))->capture_default_str();
  app.add_option("--epochs", f.epochs, "Training epochs (default 80 for shallow-cifar, 50 otherwise)")->check(CLI::NonNegativeNumber);
  app.add_option("--batch-size", c.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--micro-batch", c.micro_batch, "Split batches into chunks of this size to save memory")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--optimizer", f.optimizer, "sgd, rmsprop or adam")->check(CLI::IsMember({"sgd", "rmsprop", "adam"}));
  app.add_option("--lr", f.lr, "Learning rate")->check(CLI::PositiveNumber);
  app.add_option("--decay", f.decay, "Learning-rate decay, lr / (1 + decay * step)")->check(CLI::NonNegativeNumber);
  app.add_option("--rho", c.rho, "RMSProp averaging constant")->capture_default_str();
  app.add_option("--beta1", c.beta1, "Adam first-moment constant")->capture_default_str();
  app.add_option("--beta2", c.beta2, "Adam second-moment constant")->capture_default_str();
  app.add_option("--eps", c.eps, "Optimizer epsilon")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_flag("--augment", c.augment, "Random shifts and horizontal flips during classification training");
  app.add_option("--max-shift", c.max_shift, "Largest augmentation shift in pixels")->capture_default_str();
  app.add_option("--noise-ratio", c.noise_ratio, "Share of pixels hit by salt-and-pepper noise")->capture_default_str();
  app.add_option("--noise-variance", c.noise_variance, "Variance of the added Gaussian noise")->capture_default_str();
  app.add_flag("--pre-corrupted", c.pre_corrupted, "denoise: inputs are already noisy");
  app.add_option("--out", c.out, "train: checkpoint path; denoise: output directory");
  app.add_option("--csv", c.csv, "train: per-epoch metrics CSV; denoise: per-image PSNR CSV");
  app.add_option("--checkpoint", c.checkpoint, "Model to load for eval/denoise");
  app.add_option("--compare", c.compare, "denoise: second model (the other domain) for the paired CSV");
  app.add_option("--paired-csv", c.paired_csv, "denoise: paired colorfulness CSV path");
  app.add_option("--format", c.image_format, "denoise: output image format")->check(CLI::IsMember({"png", "ppm"}))->capture_default_str();
  app.add_flag("--no-wall-time", c.no_wall_time, "Write 0 in the wall_secs column so reruns compare byte for byte");
  app.add_flag("--quiet", c.quiet, "Only print the banner and results");
  app.add_option("--isa", f.isa, "Force a kernel set")->check(CLI::IsMember({"scalar", "avx2", "avx512"}));
}

void resolve(CLI::App& app, Flags& f) {
  RunConfig& c = f.cfg;
  if (app.count("--epochs")) c.epochs = f.epochs;
  if (app.count("--optimizer")) c.optimizer = f.optimizer;
  if (app.count("--lr")) c.lr = f.lr;
  if (app.count("--decay")) c.decay = f.decay;
  if (app.count("--filter-ratio")) c.filter_ratio = f.filter_ratio;
  if (!f.isa.empty())
    simd::set_isa(f.isa == "scalar" ? simd::Isa::scalar : f.isa == "avx2" ? simd::Isa::avx2 : simd::Isa::avx512);
}

int dispatch(const RunConfig& c, std::ostream& out) {
  if (c.command == "train") {
    const TrainResult r = run_train(c, out);
    out << (c.is_denoising() ? "final_psnr " : "final_accuracy ") << format_number(r.final_metric) << "\n";
    return 0;
  }
  if (c.command == "eval") {
    run_eval(c, out);
    return 0;
  }
  if (c.command == "denoise") {
    run_denoise(c, out);
    return 0;
  }
  if (c.command == "gradcheck") return run_gradcheck(c, out);
  if (c.command == "audit") {
    run_audit(c, out);
    return 0;
  }
  throw std::logic_error("unhandled command " + c.command);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quaternion convolutional networks: training, evaluation, denoising and gradient checks", "qcnn"};
  app.set_config("--config", "", "Read options from a 'key = value' file; command-line flags win");
  app.allow_config_extras(false);
  app.require_subcommand(1, 1);
  Flags f;
  add_options(app, f);
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Fit a preset, writing per-epoch CSV and a checkpoint"},
      {"eval", "Accuracy or PSNR of a checkpoint"},
      {"denoise", "Corrupt (or take pre-corrupted) images and write restored ones with PSNR"},
      {"gradcheck", "Finite-difference check of every layer kind; exit 1 on failure"},
      {"audit", "Per-layer parameter and multiplication counts"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    resolve(app, f);
    f.cfg.command = app.get_subcommands().front()->get_name();
    validate(f.cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    return dispatch(f.cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"qcnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data(), out, err);
}

}  // namespace qcnn
