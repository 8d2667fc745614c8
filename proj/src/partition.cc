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

#include "vinr/partition.h"

#include <cmath>
#include <numeric>
#include <string>

#include "vinr/errors.h"
#include "vinr/random.h"

namespace vinr {

std::size_t BlockPartition::num_weights() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

std::vector<std::size_t> BlockPartition::block_of_weight() const {
  std::vector<std::size_t> out(num_weights());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    for (std::size_t i : blocks[k]) out.at(i) = k;
  }
  return out;
}

void BlockPartition::validate(std::size_t n) const {
  if (blocks.empty()) throw InvalidArgument("partition has no blocks");
  std::vector<bool> seen(n, false);
  std::size_t count = 0;
  for (const auto& b : blocks) {
    if (b.empty()) throw InvalidArgument("partition has an empty block");
    for (std::size_t i : b) {
      if (i >= n || seen[i]) {
        throw InvalidArgument("partition index " + std::to_string(i) +
                              " out of range or repeated");
      }
      seen[i] = true;
      ++count;
    }
  }
  if (count != n) throw InvalidArgument("partition does not cover every weight");
}

BlockPartition BlockPartition::single_block(std::size_t n) {
  BlockPartition p;
  p.blocks.emplace_back(n);
  std::iota(p.blocks[0].begin(), p.blocks[0].end(), std::size_t{0});
  return p;
}

std::size_t compute_block_count(double c_beta_bits, double kappa_bits) {
  if (!(kappa_bits > 0.0)) throw InvalidArgument("kappa must be positive");
  if (!(c_beta_bits >= 0.0)) throw InvalidArgument("coding cost must be non-negative");
  const double k = std::ceil(c_beta_bits / kappa_bits);
  return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

std::vector<std::size_t> weight_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "partition"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  return order;
}

BlockPartition partition_weights(std::span<const double> per_weight_kl_bits, double kappa_bits,
                                 std::uint64_t seed) {
  if (!(kappa_bits > 0.0)) throw InvalidArgument("kappa must be positive");
  if (per_weight_kl_bits.empty()) throw InvalidArgument("no weights to partition");
  for (double kl : per_weight_kl_bits) {
    if (!(kl >= 0.0) || !std::isfinite(kl)) throw InvalidArgument("per-weight KL must be >= 0");
  }

  BlockPartition out;
  out.kappa_bits = kappa_bits;
  out.permutation_seed = seed;

  double fill = 0.0;
  for (std::size_t i : weight_permutation(per_weight_kl_bits.size(), seed)) {
    const double kl = per_weight_kl_bits[i];
    if (out.blocks.empty() || fill + kl > kappa_bits) {
      if (out.blocks.empty() || !out.blocks.back().empty()) out.blocks.emplace_back();
      fill = 0.0;
    }
    out.blocks.back().push_back(i);
    fill += kl;
  }
  return out;
}

}  // namespace vinr
