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

#ifndef VINR_VARIATIONAL_H_
#define VINR_VARIATIONAL_H_

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "vinr/binary_io.h"
#include "vinr/random.h"

namespace vinr {

// Floor applied to every variance that enters a density or a draw.
inline constexpr double kMinVariance = 1e-12;

inline constexpr double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
inline constexpr double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

// Factorized Gaussian N(mean, diag(variance)). Stores variances, not
// standard deviations.
class DiagonalGaussian {
 public:
  DiagonalGaussian() = default;
  // Throws InvalidArgument on length mismatch or a non-positive variance.
  DiagonalGaussian(std::vector<double> mean, std::vector<double> variance);

  std::size_t size() const { return mean_.size(); }
  std::span<const double> mean() const { return mean_; }
  std::span<const double> variance() const { return variance_; }

  // Gathers the given coordinates into a lower-dimensional Gaussian.
  DiagonalGaussian slice(std::span<const std::size_t> indices) const;

  friend bool operator==(const DiagonalGaussian&, const DiagonalGaussian&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> variance_;
};

// KL(q || p) in nats.
double kl_divergence(const DiagonalGaussian& q, const DiagonalGaussian& p);

// Per-coordinate KL(q_i || p_i) in nats.
std::vector<double> kl_per_coordinate(const DiagonalGaussian& q, const DiagonalGaussian& p);

double log_density(const DiagonalGaussian& g, std::span<const double> w);

// Reparameterized draw mean + sqrt(max(variance, kMinVariance)) * eps.
std::vector<double> sample(const DiagonalGaussian& g, Rng& rng);

// Closed-form minimizer of the average KL(q_i || p) over p: the mean of the
// posterior means, and the mean of (variance + squared deviation).
DiagonalGaussian prior_update(std::span<const DiagonalGaussian> posteriors);

// Length-prefixed little-endian f64 arrays, mean first.
void write_gaussian(ByteWriter& out, const DiagonalGaussian& g);
DiagonalGaussian read_gaussian(ByteReader& in, std::size_t max_dim);

}  // namespace vinr

#endif  // VINR_VARIATIONAL_H_
