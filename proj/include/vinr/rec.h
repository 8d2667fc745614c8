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

#ifndef VINR_REC_H_
#define VINR_REC_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vinr/random.h"
#include "vinr/range_coder.h"
#include "vinr/sobol.h"
#include "vinr/variational.h"

namespace vinr {

// Source of the shared proposal draws. Pseudo-random draws are i.i.d., which
// the A* sampling argument relies on. Sobol points are stratified and come
// in a fixed order, so the decreasing Gumbel chain keeps favouring the same
// early points and the coded sample stays biased however large N is.
enum class ProposalKind : std::uint8_t { kPseudoRandom = 0, kSobol = 1 };

struct RecSettings {
  double t_bits = 0.0;
  std::uint64_t max_samples_cap = std::uint64_t{1} << 24;
  std::uint64_t seed = 0;  // shared proposal seed
  ProposalKind proposals = ProposalKind::kPseudoRandom;

  void validate() const;
};

struct EncodedBlock {
  std::uint64_t index = 1;  // 1-based, in [1, n_samples]
  std::uint64_t n_samples = 1;
  std::uint32_t block_id = 0;

  friend bool operator==(const EncodedBlock&, const EncodedBlock&) = default;
};

// Empirical distribution of A* indices, bucketed by bit_width(index - 1)
// (bucket 0 holds index 1, bucket b holds indices in (2^(b-1), 2^b]).
struct IndexHistogram {
  static constexpr int kBuckets = 25;
  std::array<std::uint32_t, kBuckets> counts{};

  void add(std::uint64_t index);
  friend bool operator==(const IndexHistogram&, const IndexHistogram&) = default;
};

// Standard Gumbel truncated to (-inf, bound]; bound may be +inf.
double truncated_gumbel(double bound, Rng& rng);

// N = min(floor(2^(kl_bits + t)), cap), at least 1. Throws SampleCapExceeded
// if 2^(kl_bits + t) exceeds the cap.
std::uint64_t sample_count(double kl_bits, const RecSettings& settings);

// Bits used by the fixed-length code for an index in [1, n]: ceil(log2 n).
int index_width(std::uint64_t n);

// Proposal draws for one block: uniform points (counter-based hashes or
// Sobol points) mapped through the Gaussian quantile function of the prior.
// Sample i (1-based) does not depend on how many samples are requested.
class ProposalSampler {
 public:
  ProposalSampler(const DiagonalGaussian& prior_block, std::uint64_t seed,
                  ProposalKind kind = ProposalKind::kPseudoRandom);

  std::size_t dimension() const { return mean_.size(); }
  // Standard-normal coordinates of sample `index`.
  void standard_normals(std::uint64_t index, std::span<double> z) const;
  std::vector<double> sample(std::uint64_t index) const;

  // Sequential traversal, identical to repeated sample(i) calls.
  class Stream {
   public:
    explicit Stream(const ProposalSampler& s);
    // Advances and returns the standard-normal coordinates of the next sample.
    std::span<const double> next();
    std::uint64_t index() const { return index_; }

   private:
    const ProposalSampler* sampler_;
    std::optional<SobolSequence::Cursor> cursor_;
    std::uint64_t index_ = 0;
    std::vector<double> z_;
  };

  std::vector<double> to_weights(std::span<const double> z) const;

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
  std::uint64_t seed_;
  std::optional<SobolSequence> sobol_;
};

// Proposal seed of one block, shared by encoder and decoder.
std::uint64_t block_proposal_seed(const RecSettings& settings, std::uint32_t block_id);

std::vector<std::vector<double>> proposal_samples(
    const DiagonalGaussian& prior_block, std::uint64_t n, std::uint64_t seed,
    ProposalKind kind = ProposalKind::kPseudoRandom);

// Global-bound A* search over n proposals. log_ratio(i) returns the log
// importance weight of proposal i (1-based). Perturbations follow the
// decreasing truncated-Gumbel chain G_0 = +inf, G_i ~ TruncGumbel(G_{i-1}).
// Returns the 1-based argmax of G_i + log_ratio(i); ties keep the earlier
// index.
template <typename LogRatio>
std::uint64_t astar_search(std::uint64_t n, LogRatio&& log_ratio, Rng& gumbel_rng,
                           std::vector<double>* chain = nullptr) {
  double bound = std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 1;
  for (std::uint64_t i = 1; i <= n; ++i) {
    bound = truncated_gumbel(bound, gumbel_rng);
    if (chain) chain->push_back(bound);
    const double perturbed = bound + log_ratio(i);
    if (perturbed > best) {
      best = perturbed;
      best_index = i;
    }
  }
  return best_index;
}

struct AStarResult {
  EncodedBlock encoded;
  std::vector<double> sample;
  double kl_bits = 0.0;
};

// Encodes one sample of target using proposals from prior. Throws
// Error on a non-finite importance weight.
AStarResult astar_encode(const DiagonalGaussian& target, const DiagonalGaussian& prior,
                         const RecSettings& settings, std::uint64_t gumbel_seed,
                         std::uint32_t block_id = 0);

// Re-simulates proposal `encoded.index`. Throws CorruptStream if the index is
// outside [1, n_samples].
std::vector<double> astar_decode(const DiagonalGaussian& prior_block, const EncodedBlock& encoded,
                                 const RecSettings& settings);

// Index payload. Without a histogram every index i takes index_width(N) bits
// (value i - 1). With a histogram the bucket of i is range coded under the
// add-one smoothed bucket frequencies (restricted to buckets that fit N) and
// the bits below the leading one follow as equiprobable symbols.
BitString code_indices(std::span<const EncodedBlock> blocks, const IndexHistogram* histogram);

std::vector<std::uint64_t> decode_indices(const BitString& bits,
                                          std::span<const std::uint64_t> n_samples,
                                          const IndexHistogram* histogram);

}  // namespace vinr

#endif  // VINR_REC_H_
