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

#include "vinr/sobol.h"

#include <bit>
#include <string>
#include <unordered_map>

#include "vinr/errors.h"
#include "vinr/random.h"

namespace vinr {

std::size_t sobol_capacity() { return sobol_detail::kTableDimensions; }

std::array<std::uint32_t, kSobolBits> sobol_direction_numbers(std::size_t table_dim) {
  if (table_dim >= sobol_capacity()) throw InvalidArgument("Sobol dimension out of range");
  std::array<std::uint32_t, kSobolBits> m{};
  if (table_dim == 0) {
    m.fill(1);
  } else {
    const std::uint32_t poly = sobol_detail::kPolynomials[table_dim];
    const int degree = std::bit_width(poly) - 1;
    const std::uint32_t* init =
        sobol_detail::kInitialNumbers + sobol_detail::kInitialOffsets[table_dim];
    for (int j = 0; j < degree; ++j) m[j] = init[j];
    // m_j = m_{j-s} ^ (m_{j-s} << s) ^ sum_k a_k (m_{j-k} << k)
    for (int j = degree; j < kSobolBits; ++j) {
      std::uint32_t value = m[j - degree];
      std::uint32_t pow2 = 1;
      for (int k = 0; k < degree; ++k) {
        pow2 <<= 1;
        if ((poly >> (degree - 1 - k)) & 1u) value ^= pow2 * m[j - k - 1];
      }
      m[j] = value;
    }
  }
  for (int j = 0; j < kSobolBits; ++j) m[j] <<= (kSobolBits - 1 - j);
  return m;
}

SobolSequence::SobolSequence(std::span<const std::size_t> table_dims)
    : dims_(table_dims.size()), directions_(table_dims.size() * kSobolBits) {
  for (std::size_t d = 0; d < dims_; ++d) {
    const auto v = sobol_direction_numbers(table_dims[d]);
    for (int b = 0; b < kSobolBits; ++b) directions_[d * kSobolBits + b] = v[b];
  }
}

SobolSequence SobolSequence::seeded(std::size_t dimension, std::uint64_t seed) {
  const std::size_t capacity = sobol_capacity();
  if (dimension > capacity) {
    throw InvalidArgument("block dimension " + std::to_string(dimension) +
                          " exceeds Sobol capacity " + std::to_string(capacity));
  }
  // Partial Fisher-Yates over the table dimensions, with the swaps kept in a
  // sparse map.
  Rng rng(derive_seed(seed, "sobol-dimensions"));
  std::unordered_map<std::size_t, std::size_t> swapped;
  auto at = [&](std::size_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::size_t> chosen(dimension);
  for (std::size_t i = 0; i < dimension; ++i) {
    const std::size_t j = i + rng.below(capacity - i);
    const std::size_t vi = at(i), vj = at(j);
    swapped[i] = vj;
    swapped[j] = vi;
    chosen[i] = vj;
  }
  return SobolSequence(chosen);
}

void SobolSequence::point(std::uint64_t index, std::span<std::uint32_t> out) const {
  if (out.size() != dims_) throw InvalidArgument("Sobol output size mismatch");
  if (index >> kSobolBits) throw InvalidArgument("Sobol index out of range");
  const std::uint64_t gray = index ^ (index >> 1);
  for (std::size_t d = 0; d < dims_; ++d) {
    std::uint32_t x = 0;
    const std::uint32_t* v = directions_.data() + d * kSobolBits;
    for (std::uint64_t g = gray; g != 0; g &= g - 1) x ^= v[std::countr_zero(g)];
    out[d] = x;
  }
}

std::span<const std::uint32_t> SobolSequence::Cursor::next() {
  ++index_;
  if (index_ >> kSobolBits) throw InvalidArgument("Sobol sequence exhausted");
  const int bit = std::countr_zero(index_);
  const std::uint32_t* v = seq_->directions_.data();
  for (std::size_t d = 0; d < state_.size(); ++d) state_[d] ^= v[d * kSobolBits + bit];
  return state_;
}

}  // namespace vinr
