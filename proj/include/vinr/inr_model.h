// Copyright 2026 The vinr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VINR_INR_MODEL_H_
#define VINR_INR_MODEL_H_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vinr/partition.h"
#include "vinr/random.h"
#include "vinr/variational.h"

namespace vinr {

// Architecture of the sine MLP. The first dense layer consumes the Fourier
// embedding; num_layers counts every dense layer including the linear
// output layer.
struct INRConfig {
  int input_dim = 2;
  int output_dim = 3;
  int num_layers = 4;
  int hidden_units = 16;
  int fourier_embeddings = 32;
  double frequency_scale = 10.0;
  double omega0 = 30.0;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;

  friend bool operator==(const INRConfig&, const INRConfig&) = default;
};

std::size_t param_count(const INRConfig& config);

// Position of one dense layer inside the flat weight vector. Weights are
// stored row-major as a (fan_out x fan_in) matrix, followed by fan_out
// biases; layers follow each other from input to output.
struct LayerLayout {
  std::size_t fan_in;
  std::size_t fan_out;
  std::size_t weight_offset;
  std::size_t bias_offset;
  bool sine;
};

std::vector<LayerLayout> layer_layout(const INRConfig& config);

// Coordinate/value pairs of one datum. coords are in [-1, 1] per axis and
// targets in [0, 1].
struct SignalBatch {
  Eigen::MatrixXd coords;
  Eigen::MatrixXd targets;

  std::size_t size() const { return static_cast<std::size_t>(coords.rows()); }
  void validate(const INRConfig& config) const;
};

// Rows of a random subset of ceil(fraction * n) points, drawn without
// replacement and sorted. Used to train on a fraction of the points each step.
std::vector<Eigen::Index> sample_rows(std::size_t n, double fraction, Rng& rng);

// Optimization-space parameters of a factorized Gaussian posterior: means and
// log-variances.
struct VariationalParams {
  std::vector<double> mean;
  std::vector<double> log_variance;

  std::size_t size() const { return mean.size(); }
  // Variances are exp(log_variance), floored at kMinVariance.
  DiagonalGaussian distribution() const;
  static VariationalParams from(const DiagonalGaussian& g);

  friend bool operator==(const VariationalParams&, const VariationalParams&) = default;
};

// Blocks whose weights are fixed at decoded sample values.
struct FrozenBlocks {
  std::vector<bool> frozen;    // one flag per block
  std::vector<double> values;  // full weight vector; read only where frozen

  static FrozenBlocks none(std::size_t num_blocks, std::size_t num_weights) {
    return {std::vector<bool>(num_blocks, false), std::vector<double>(num_weights, 0.0)};
  }
};

struct LossAndGrads {
  double distortion = 0.0;           // summed squared error
  std::vector<double> block_kl_nats;  // KL per block, 0 for frozen blocks
  double total = 0.0;                // distortion + sum_k lambda_k * kl_k
  std::vector<double> grad_mean;
  std::vector<double> grad_log_variance;
};

// Sine MLP over a fixed random Fourier embedding of the coordinates.
class InrModel {
 public:
  InrModel(INRConfig config, std::uint64_t fourier_seed);

  const INRConfig& config() const { return config_; }
  std::size_t num_params() const { return num_params_; }
  const std::vector<LayerLayout>& layers() const { return layers_; }

  // Frequency matrix B, (fourier_embeddings / 2) x input_dim.
  const Eigen::MatrixXd& frequencies() const { return frequencies_; }

  // [sin(2 pi x B^T), cos(2 pi x B^T)], one row per coordinate.
  Eigen::MatrixXd embed(const Eigen::MatrixXd& coords) const;

  // Deterministic pass. Throws InvalidArgument if weights.size() != num_params().
  Eigen::MatrixXd forward(std::span<const double> weights, const Eigen::MatrixXd& coords) const;
  Eigen::MatrixXd forward_embedded(std::span<const double> weights,
                                   const Eigen::MatrixXd& embedded) const;

  // Stochastic pass that samples every pre-activation from the Gaussian
  // implied by the weight posterior (local reparameterization).
  Eigen::MatrixXd forward_local_reparam(const DiagonalGaussian& posterior,
                                        const Eigen::MatrixXd& coords, Rng& noise) const;

  // Summed squared error of the deterministic pass and its gradient.
  double distortion_and_grad(std::span<const double> weights, const Eigen::MatrixXd& embedded,
                             const Eigen::MatrixXd& targets, std::vector<double>* grad) const;

  // SIREN initialization of the weight means.
  std::vector<double> initial_means(Rng& rng) const;

  // Variance of each weight under the initialization distribution.
  std::vector<double> initial_variances() const;

  // Distortion from one local-reparameterization sample plus the
  // lambda-weighted block KLs, with gradients for the free coordinates.
  // lambdas has one entry per block (entries of frozen blocks are ignored).
  LossAndGrads loss_and_grads(const VariationalParams& posterior, const DiagonalGaussian& prior,
                              const Eigen::MatrixXd& embedded, const Eigen::MatrixXd& targets,
                              std::span<const double> lambdas, const BlockPartition& partition,
                              const FrozenBlocks& frozen, Rng& noise) const;

  // Core pass shared by the stochastic and deterministic paths. mean/var are
  // effective per-weight moments (var may be zero). Returns predictions; if
  // targets is non-null also fills grads and returns the SSE in *sse.
  Eigen::MatrixXd moment_pass(std::span<const double> mean, std::span<const double> var,
                              const Eigen::MatrixXd& embedded, Rng* noise,
                              const Eigen::MatrixXd* targets, double* sse,
                              std::vector<double>* grad_mean,
                              std::vector<double>* grad_var) const;

 private:
  INRConfig config_;
  std::size_t num_params_;
  std::vector<LayerLayout> layers_;
  Eigen::MatrixXd frequencies_;
};

}  // namespace vinr

#endif  // VINR_INR_MODEL_H_
