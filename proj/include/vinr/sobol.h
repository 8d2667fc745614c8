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

#ifndef VINR_SOBOL_H_
#define VINR_SOBOL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vinr {

namespace sobol_detail {
extern const std::size_t kTableDimensions;
extern const std::uint32_t kPolynomials[];
extern const std::uint32_t kInitialNumbers[];
extern const std::uint32_t kInitialOffsets[];
}  // namespace sobol_detail

// Identifies the direction-number table and point ordering. Written into
// bitstream headers; bump it whenever generated points could change.
inline constexpr std::uint16_t kSobolTableVersion = 1;

inline constexpr int kSobolBits = 32;

// Number of dimensions available in the direction-number table.
std::size_t sobol_capacity();

// Direction integers v_0..v_31 (already shifted to 32-bit fixed point) of
// one table dimension.
std::array<std::uint32_t, kSobolBits> sobol_direction_numbers(std::size_t table_dim);

// Multi-dimensional Sobol sequence in Gray-code order. Point 0 is the
// origin; point 1 is (1/2, ..., 1/2). Each coordinate is driven by one
// dimension of the direction-number table.
class SobolSequence {
 public:
  explicit SobolSequence(std::span<const std::size_t> table_dims);

  // Uses `dimension` distinct table dimensions picked by a seeded shuffle.
  // Throws InvalidArgument if dimension exceeds sobol_capacity().
  static SobolSequence seeded(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const { return dims_; }

  // Random access to point `index` (< 2^32) as 32-bit fixed-point fractions.
  void point(std::uint64_t index, std::span<std::uint32_t> out) const;

  // Sequential access; starts at point 0.
  class Cursor {
   public:
    explicit Cursor(const SobolSequence& seq) : seq_(&seq), state_(seq.dims_, 0) {}
    // Advances to the next point and returns it.
    std::span<const std::uint32_t> next();
    std::uint64_t index() const { return index_; }

   private:
    const SobolSequence* seq_;
    std::vector<std::uint32_t> state_;
    std::uint64_t index_ = 0;
  };

 private:
  std::size_t dims_;
  std::vector<std::uint32_t> directions_;  // dims_ x kSobolBits
};

inline double sobol_to_unit(std::uint32_t x) { return static_cast<double>(x) * 0x1.0p-32; }

}  // namespace vinr

#endif  // VINR_SOBOL_H_
