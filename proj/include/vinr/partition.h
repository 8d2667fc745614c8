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

#ifndef VINR_PARTITION_H_
#define VINR_PARTITION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vinr {

// Assignment of flattened weight indices to coding blocks. Blocks are
// disjoint, cover 0..num_weights-1, and are listed in coding order.
struct BlockPartition {
  std::vector<std::vector<std::size_t>> blocks;
  double kappa_bits = 16.0;
  std::uint64_t permutation_seed = 0;

  std::size_t num_blocks() const { return blocks.size(); }
  std::size_t num_weights() const;

  // Block index of every weight.
  std::vector<std::size_t> block_of_weight() const;

  // Throws InvalidArgument unless blocks are disjoint and cover 0..n-1.
  void validate(std::size_t num_weights) const;

  // One block holding every weight, in natural order.
  static BlockPartition single_block(std::size_t num_weights);

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;
};

// ceil(c_beta / kappa), at least 1.
std::size_t compute_block_count(double c_beta_bits, double kappa_bits);

// Next-fit packing of the weights, visited in a seeded random order, into
// blocks whose summed average KL stays within kappa. A weight that alone
// exceeds kappa gets a block to itself.
BlockPartition partition_weights(std::span<const double> per_weight_kl_bits, double kappa_bits,
                                 std::uint64_t seed);

// The seeded visiting order used by partition_weights.
std::vector<std::size_t> weight_permutation(std::size_t n, std::uint64_t seed);

}  // namespace vinr

#endif  // VINR_PARTITION_H_
