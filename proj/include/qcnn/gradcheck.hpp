#pragma once

// Independent oracles: central finite differences for every backward pass and
// a literal w q w* quaternion convolution for the matrix-form forward pass.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qcnn/layers.hpp"
#include "qcnn/network.hpp"
#include "qcnn/random.hpp"

namespace qcnn {

struct GroupError {
  std::string name;
  std::size_t count = 0;
  double max_rel = 0.0;
  double max_abs = 0.0;
  std::size_t worst = 0;  // index of the largest relative error
  double analytic = 0.0;  // values at `worst`
  double numeric = 0.0;
};

struct GradCheckReport {
  std::string probe;
  double tolerance = 1e-4;
  std::vector<GroupError> groups;

  double max_rel() const;
  bool passed() const { return max_rel() < tolerance; }
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// (f(p + eps e_i) - f(p - eps e_i)) / (2 eps) for every i.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& probe,
                                     std::span<const double> params, double eps);

/// Quaternion convolution evaluated tap by tap as s * (w q w*) with
/// w = cos(theta/2) + sin(theta/2) * gray axis, using Hamilton products.
QFeatureMap<double> oracle_qconv(const QFeatureMap<double>& x, const QConvKernel<double>& k, ConvConfig cfg);

/// Randomizes the layer's parameters and a batch of inputs, then compares its
/// backward pass with central differences of <forward(x), mask> for the
/// input and every parameter group. ReLU and max-pool inputs are resampled
/// until every value sits at least 1e-3 away from a kink or tie.
GradCheckReport check_layer(Layer<double>& layer, int batch, double tolerance, Rng& rng, double eps = 1e-5);

/// Same probe through a whole network, skip links included.
GradCheckReport check_network(Network<double>& net, int batch, double tolerance, Rng& rng, double eps = 1e-5);

/// Batch-mean softmax + cross-entropy gradient against central differences.
GradCheckReport check_softmax_cross_entropy(int batch, int classes, double tolerance, Rng& rng, double eps = 1e-5);
GradCheckReport check_mse(int count, double tolerance, Rng& rng, double eps = 1e-5);

struct SuiteOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double tolerance = 1e-4;
  double eps = 1e-5;
};

/// Every shipped layer kind, both losses and two small networks, once per seed.
std::vector<GradCheckReport> run_gradcheck_suite(const SuiteOptions& opts = {});

/// Fixed-width table, one row per probe and parameter group.
std::string format_reports(const std::vector<GradCheckReport>& reports);

}  // namespace qcnn
