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

#ifndef VINR_PIPELINE_H_
#define VINR_PIPELINE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vinr/adam.h"
#include "vinr/binary_io.h"
#include "vinr/data_io.h"
#include "vinr/inr_model.h"
#include "vinr/partition.h"
#include "vinr/prior_learning.h"
#include "vinr/range_coder.h"
#include "vinr/rec.h"

namespace vinr {

inline constexpr std::uint16_t kCompressedFormatVersion = 1;

struct FineTuneSettings {
  int fit_iterations = 25000;
  int inter_block_iterations = 15;
  std::optional<double> lambda_init;  // defaults to the prior's beta
  double lambda_step = 1.05;
  int adjust_period = 15;
  double buffer_bits = 0.4;
  double learning_rate = 2e-4;
  double posterior_var_init = 9e-6;
  // Share of the points drawn for each step; lambda is scaled to match.
  double batch_fraction = 1.0;
  // Lower bound on every lambda as a multiple of its initial value (0: none).
  double lambda_floor = 0.0;

  void validate() const;
};

struct CompressionHeader {
  INRConfig config;
  Sha256Digest prior_hash{};
  SignalDescriptor signal;
  std::uint64_t rec_seed = 0;
  double t_bits = 0.0;
  double kappa_bits = 16.0;
  std::uint64_t permutation_seed = 0;
  ProposalKind proposals = ProposalKind::kPseudoRandom;
  std::uint32_t sobol_version = kSobolTableVersion;
  bool histogram_coded = false;
  // ceil(log2 N_k) for every block, in coding order. Its length is K.
  std::vector<std::uint8_t> index_widths;

  std::size_t num_blocks() const { return index_widths.size(); }
  friend bool operator==(const CompressionHeader&, const CompressionHeader&) = default;
};

struct CompressedObject {
  CompressionHeader header;
  BitString payload;

  friend bool operator==(const CompressedObject& a, const CompressedObject& b) {
    return a.header == b.header && a.payload.bit_count == b.payload.bit_count &&
           a.payload.bytes == b.payload.bytes;
  }
};

// Layout: "CMB1", u16 version, header fields, u64 payload bit count, payload
// bytes (zero padded), u32 CRC32 of everything before it. Integers are
// little endian.
std::vector<std::uint8_t> serialize_compressed(const CompressedObject& object);
// Throws CorruptStream on bad magic, CRC, version, or truncation.
CompressedObject deserialize_compressed(std::span<const std::uint8_t> bytes);
void save_compressed(const CompressedObject& object, const std::string& path);
CompressedObject load_compressed(const std::string& path);

// One rate-control step: lambda *= step above kappa, lambda /= step below
// kappa - buffer, unchanged in between. Frozen blocks are skipped.
void adjust_lambdas(std::span<double> lambdas, std::span<const double> block_kl_bits,
                    double kappa_bits, double step, double buffer_bits,
                    const std::vector<bool>& frozen = {});

// Adam on the block-penalized objective with per-block rate control. Frozen
// blocks keep their decoded values and receive no updates.
class PosteriorFitter {
 public:
  PosteriorFitter(const InrModel& model, const SignalBatch& datum, const DiagonalGaussian& prior,
                  const BlockPartition& partition, const FineTuneSettings& settings,
                  double beta, std::uint64_t noise_seed);

  // Runs `iterations` Adam steps. Throws DivergenceError naming the
  // iteration on a non-finite loss.
  void run(int iterations);
  // Like run(), but a step that leaves any open block above `max_block_bits`
  // is undone and ends the run. Returns the number of steps kept.
  int run_bounded(int iterations, double max_block_bits);
  void freeze(std::size_t block, std::span<const double> values);

  const VariationalParams& posterior() const { return posterior_; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  const FrozenBlocks& frozen() const { return frozen_; }
  long iterations_run() const { return iteration_; }
  // KL(q_k || p_k) in bits of every block under the current posterior.
  std::vector<double> block_kl_bits() const;

 private:
  const InrModel& model_;
  Eigen::MatrixXd embedded_;
  Eigen::MatrixXd targets_;
  const DiagonalGaussian& prior_;
  const BlockPartition& partition_;
  FineTuneSettings settings_;
  VariationalParams posterior_;
  double lambda_init_;
  std::vector<double> lambdas_;
  FrozenBlocks frozen_;
  std::vector<bool> active_;
  Adam adam_;
  Rng noise_;
  long iteration_ = 0;
};

enum class EncodeMode {
  kAStar,
  // Every block takes an exact posterior draw instead of a coded proposal.
  // The result is not decodable; it estimates the quality REC approximates.
  kExactPosteriorSample,
};

struct CompressionSettings {
  FineTuneSettings fine_tune;
  double kappa_bits = 16.0;
  double t_bits = 0.0;
  std::uint64_t max_samples_cap = std::uint64_t{1} << 24;
  bool use_histogram = false;
  ProposalKind proposals = ProposalKind::kPseudoRandom;
  EncodeMode mode = EncodeMode::kAStar;
  // Stops inter-block fine-tuning before an open block outgrows the sample cap.
  bool guard_sample_cap = true;
  // Source of the permutation, proposal, gumbel and noise sub-seeds.
  std::uint64_t seed = 0;
};

struct CompressionResult {
  CompressedObject object;
  Eigen::MatrixXd reconstruction;
  std::vector<double> weights;
  std::vector<EncodedBlock> blocks;
  std::vector<double> block_kl_bits;      // at encoding time
  std::vector<double> fit_block_kl_bits;  // after posterior fitting
  std::vector<double> fit_lambdas;
  double fit_seconds = 0.0;
  double rec_seconds = 0.0;
  // Fine-tuning phases cut short by the sample-cap guard.
  int guarded_stops = 0;
};

// The partition a stream with this header uses.
BlockPartition stream_partition(const PriorModel& prior, double kappa_bits,
                                std::uint64_t permutation_seed);

// Posterior fitting followed by progressive block coding with fine-tuning
// between blocks.
CompressionResult compress(const SignalBatch& datum, const SignalDescriptor& descriptor,
                           const PriorModel& prior, const CompressionSettings& settings);

// Throws WrongPrior when the stream names another prior, CorruptStream on an
// undecodable payload.
Eigen::MatrixXd decompress(const CompressedObject& object, const PriorModel& prior);

struct Metrics {
  double bits_total = 0.0;
  double bits_per_unit = 0.0;  // per pixel, or per second for audio
  double mse = 0.0;
  double psnr_db = 0.0;        // +inf for identical signals
};

// Predictions are clamped to [0, 1] before comparison; peak is 1.
Metrics measure(const CompressedObject& object, const Eigen::MatrixXd& reconstruction,
                const Eigen::MatrixXd& original);
double psnr(double mse);

IndexHistogram build_index_histogram(std::span<const EncodedBlock> blocks);

}  // namespace vinr

#endif  // VINR_PIPELINE_H_
