#pragma once

// Initialization, losses, optimizers, the epoch loop and checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcnn/network.hpp"
#include "qcnn/random.hpp"

namespace qcnn {

// ---------------------------------------------------------------------------
// Initialization

/// sqrt(6) / sqrt(fan_in + fan_out)
double init_bound(int fan_in, int fan_out);

/// Scales and real weights ~ U[-b, b] with b = init_bound(fan_in, fan_out);
/// angles ~ U[-pi/2, pi/2]; biases 0. Groups are filled in order from rng.
template <class T>
void init_quaternion_params(std::span<ParamView<T>> params, Rng& rng);

template <class T>
void init_network(Network<T>& net, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Losses

template <class T>
struct LossResult {
  double loss = 0.0;
  std::vector<T> grad;  // dL/d(logits) or dL/d(output), same length as the input
};

/// -log(max(p[label], 1e-12)); grad is the combined softmax + cross-entropy
/// gradient with respect to the logits, p - onehot(label).
template <class T>
LossResult<T> cross_entropy_loss(std::span<const T> probs, int label);

/// Batch mean of cross-entropy after softmax_head on each row of logits
/// (N, classes). grad = (p - onehot) / N.
template <class T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// mean((out - target)^2) over every element; grad = 2 (out - target) / count.
template <class T>
LossResult<T> mse_loss(std::span<const T> out, std::span<const T> target);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { sgd, rmsprop, adam };

std::string_view optimizer_name(OptimizerKind k);
std::optional<OptimizerKind> parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 1e-4;
  double decay = 0.0;  // lr_t = lr / (1 + decay * t), t = completed steps
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct OptimizerState {
  OptimizerConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;  // adam first moment
  std::vector<std::vector<T>> v;  // adam second moment / rmsprop mean square

  OptimizerState() = default;
  explicit OptimizerState(OptimizerConfig c) : config(c) {}
};

template <class T>
void sgd_step(std::span<ParamView<T>> params, OptimizerState<T>& state);
template <class T>
void rmsprop_step(std::span<ParamView<T>> params, OptimizerState<T>& state);
template <class T>
void adam_step(std::span<ParamView<T>> params, OptimizerState<T>& state);
/// Dispatches on state.config.kind.
template <class T>
void optimizer_step(std::span<ParamView<T>> params, OptimizerState<T>& state);

// ---------------------------------------------------------------------------
// Training loop

enum class LossKind { cross_entropy, mse };

template <class T>
struct Dataset {
  Tensor<T> inputs;         // (N, C, H, W)
  std::vector<int> labels;  // classification targets
  Tensor<T> targets;        // regression targets, (N, ...) matching the network output

  int size() const { return inputs.batch(); }
};

/// Copies the listed samples of a (N, C, H, W) tensor into a new batch.
template <class T>
Tensor<T> gather(const Tensor<T>& all, std::span<const int> indices);

template <class T>
struct TrainOptions {
  LossKind loss = LossKind::cross_entropy;
  int batch_size = 32;
  int micro_batch = 0;  // > 0 splits each batch to bound activation memory
  std::function<void(Tensor<T>&, Rng&)> augment;  // applied to each gathered batch
};

struct EpochStats {
  double mean_loss = 0.0;
  int samples = 0;
};

/// One pass over a seeded shuffle of the data: batch-mean gradients, one
/// optimizer step per batch. Deterministic given the rng state.
template <class T>
EpochStats train_epoch(Network<T>& net, const Dataset<T>& data, const TrainOptions<T>& opts,
                       OptimizerState<T>& opt, Rng& rng);

/// Runs the network over `inputs` in chunks and returns all outputs.
template <class T>
Tensor<T> predict_all(Network<T>& net, const Tensor<T>& inputs, int chunk = 64);

/// Index of the largest logit per row (first wins).
template <class T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint8_t kCheckpointVersion = 1;

template <class T>
struct Checkpoint {
  NetworkSpec spec;
  std::unique_ptr<Network<T>> network;
  std::optional<OptimizerState<T>> optimizer;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> manifest;  // every key = value line except layers
};

/// "QCNN", version byte, u32 manifest length, text manifest, then the
/// parameters as little-endian IEEE floats in params() order (binary32 for
/// float networks, binary64 for double), then optionally a u64 length and
/// the optimizer buffers.
template <class T>
void save_checkpoint(const std::filesystem::path& path, Network<T>& net, const OptimizerState<T>* opt,
                     std::uint64_t seed, const std::map<std::string, std::string>& extra = {});

/// Throws FormatError on bad magic, unknown version, precision mismatch or
/// truncation.
template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

/// "float32" or "float64", read from the manifest.
std::string checkpoint_precision(const std::filesystem::path& path);

}  // namespace qcnn
