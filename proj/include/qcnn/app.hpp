#pragma once

// Run configuration and the commands behind the qcnn executable.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcnn/data.hpp"
#include "qcnn/metrics.hpp"
#include "qcnn/training.hpp"

namespace qcnn {

struct RunConfig {
  std::string command;
  std::string preset = "shallow-cifar";
  bool quaternion = false;
  std::optional<double> filter_ratio;  // preset default when unset
  std::string precision = "single";    // single | double

  std::string dataset;  // CIFAR-10 batch directory or image folder
  std::size_t subset = 0;        // training samples (classification) or images (denoising); 0 = all
  std::size_t test_subset = 1000;  // CIFAR-10 test records
  double test_fraction = 0.2;    // share of the image folder held out for testing
  std::string eval_split = "test";

  std::optional<int> epochs;      // 80 for shallow-cifar, 50 otherwise
  int batch_size = 32;
  int micro_batch = 0;
  std::optional<std::string> optimizer;  // rmsprop for shallow-cifar, adam otherwise
  std::optional<double> lr;              // 1e-4 for rmsprop, 1e-3 for adam
  std::optional<double> decay;           // 1e-6 for rmsprop, 0 otherwise
  double rho = 0.9, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 1;

  bool augment = false;
  int max_shift = 4;
  double noise_ratio = 0.30;
  double noise_variance = 0.01;
  bool pre_corrupted = false;

  std::string out;         // train: checkpoint path; denoise: output directory
  std::string csv;         // train: per-epoch metrics; denoise: per-image PSNR
  std::string checkpoint;  // eval/denoise: model to load
  std::string compare;     // denoise: second checkpoint for the paired colorfulness CSV
  std::string paired_csv;
  std::string image_format = "png";
  bool no_wall_time = false;
  bool quiet = false;

  // Resolved values.
  int resolved_epochs() const;
  double resolved_filter_ratio() const;
  OptimizerConfig optimizer_config() const;
  bool is_denoising() const { return preset == "denoiser"; }
};

/// Throws std::invalid_argument on a bad preset, optimizer, precision, split,
/// image format or non-positive epoch/batch count.
void validate(const RunConfig& cfg);

/// One line with everything needed to reproduce the run.
std::string run_banner(const RunConfig& cfg, std::int64_t param_count);

struct TrainResult {
  std::vector<EpochRecord> records;
  double final_metric = 0.0;     // accuracy or mean PSNR on the eval split
  double baseline_metric = 0.0;  // denoising: mean PSNR of the corrupted inputs
  double train_accuracy = 0.0;   // classification: accuracy on the training set after the last epoch
  std::int64_t param_count = 0;
};

/// Fits the configured preset, writing the CSV and checkpoint when paths are set.
TrainResult run_train(const RunConfig& cfg, std::ostream& log);

struct EvalResult {
  std::string task;    // "classification" or "denoising"
  double metric = 0.0;
  double baseline = 0.0;
  std::vector<double> outputs;  // raw network outputs, in order, as doubles
};

EvalResult run_eval(const RunConfig& cfg, std::ostream& log);

struct DenoiseReport {
  std::string name;
  double psnr_input = 0.0;
  double psnr_output = 0.0;
};

std::vector<DenoiseReport> run_denoise(const RunConfig& cfg, std::ostream& log);

/// Returns the process exit code (0 pass, 1 any failure).
int run_gradcheck(const RunConfig& cfg, std::ostream& log);

/// Per-layer parameter and multiplication table.
void run_audit(const RunConfig& cfg, std::ostream& log);

// ---------------------------------------------------------------------------
// Dataset plumbing shared with the tests.

/// Evenly interleaved hold-out: index i goes to test when
/// floor((i + 1) f) > floor(i f).
std::vector<bool> holdout_mask(std::size_t count, double fraction);

struct DenoiseSplit {
  std::vector<Image> train_clean;
  std::vector<Image> test_clean;
  std::vector<Image> test_corrupted;
  std::vector<std::string> test_names;
};

/// Loads the image folder, applies subset and hold-out, and corrupts the test
/// images with an rng derived from the seed.
DenoiseSplit load_denoise_split(const RunConfig& cfg, int image_size);

/// Dataset directory from the config or, when empty, $QCNN_CIFAR10_DIR.
std::string resolve_cifar_dir(const RunConfig& cfg);

// ---------------------------------------------------------------------------

/// Parses argv (config file first, flags override), runs the command and
/// returns 0 on success, 1 on a runtime failure, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcnn
