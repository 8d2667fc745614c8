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

#ifndef VINR_PRIOR_LEARNING_H_
#define VINR_PRIOR_LEARNING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vinr/binary_io.h"
#include "vinr/inr_model.h"
#include "vinr/rec.h"
#include "vinr/variational.h"

namespace vinr {

inline constexpr std::uint16_t kPriorFormatVersion = 1;

// Side information shared by encoder and decoder.
struct PriorModel {
  INRConfig config;
  std::uint64_t fourier_seed = 0;
  DiagonalGaussian prior;
  double beta = 0.0;
  double c_beta_bits = 0.0;
  // Average KL of every weight over the training posteriors; the block
  // partition is rebuilt from it.
  std::vector<double> per_weight_kl_bits;
  std::optional<IndexHistogram> index_histogram;
  Sha256Digest content_hash{};

  void validate() const;
  // Digest of every other field, as serialized.
  Sha256Digest compute_hash() const;
  void refresh_hash() { content_hash = compute_hash(); }
};

// Five u32 integers then frequency_scale and omega0 as f64.
void write_inr_config(ByteWriter& out, const INRConfig& config);
// Throws CorruptStream on an invalid configuration.
INRConfig read_inr_config(ByteReader& in);

std::vector<std::uint8_t> serialize_prior(const PriorModel& model);
// Throws CorruptStream on bad magic, version, truncation or digest mismatch.
PriorModel deserialize_prior(std::span<const std::uint8_t> bytes);
void save_prior(const PriorModel& model, const std::string& path);
PriorModel load_prior(const std::string& path);

struct TrainingSchedule {
  int epochs = 128;
  int iters_per_epoch = 100;
  int first_epoch_iters = 250;
  double learning_rate = 2e-4;
  double posterior_var_init = 9e-6;
  // Reuse one noise draw for every step, which makes the objective
  // deterministic. Each posterior step then keeps its best iterate.
  bool frozen_noise = false;
  // Stop once the relative per-epoch improvement of the objective falls
  // below this value (0 disables).
  double early_stop_tolerance = 0.0;
  // Share of each datum's points used per step, drawn afresh every step (a
  // fixed draw under frozen noise). The distortion is rescaled to the full
  // datum by scaling beta instead.
  double batch_fraction = 1.0;
  int jobs = 1;

  void validate() const;
};

struct PriorLearningResult {
  PriorModel model;
  std::vector<VariationalParams> posteriors;
  // Average objective after each epoch's posterior step and after its prior
  // update.
  std::vector<double> objective_after_posteriors;
  std::vector<double> objective_after_prior;
  int epochs_run = 0;
};

// Coordinate descent: per-datum posterior optimization (parallel over data)
// alternating with the closed-form prior update.
PriorLearningResult learn_prior(std::span<const SignalBatch> dataset, const INRConfig& config,
                                double beta, const TrainingSchedule& schedule, std::uint64_t seed);

// Average total KL of the posteriors against the prior, in bits.
double estimate_coding_cost(std::span<const DiagonalGaussian> posteriors,
                            const DiagonalGaussian& prior);

// Per-coordinate KL averaged over the posteriors, in bits.
std::vector<double> per_weight_kl(std::span<const DiagonalGaussian> posteriors,
                                  const DiagonalGaussian& prior);

// Mean over data of distortion + beta * KL, where the distortion uses the
// single noise draw seeded by noise_seed.
double average_objective(const InrModel& model, std::span<const SignalBatch> dataset,
                         std::span<const VariationalParams> posteriors,
                         const DiagonalGaussian& prior, double beta, std::uint64_t noise_seed);

}  // namespace vinr

#endif  // VINR_PRIOR_LEARNING_H_
