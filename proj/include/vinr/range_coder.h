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

#ifndef VINR_RANGE_CODER_H_
#define VINR_RANGE_CODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vinr {

// A bit string: bit i lives in bytes[i / 8] at position 7 - i % 8 (MSB
// first). Trailing bits of the last byte are zero.
struct BitString {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;

  friend bool operator==(const BitString&, const BitString&) = default;
};

class BitWriter {
 public:
  // Appends the low `width` bits of value, most significant first.
  void write(std::uint64_t value, int width);
  BitString finish() { return std::move(out_); }

 private:
  BitString out_;
};

class BitReader {
 public:
  explicit BitReader(const BitString& bits) : bits_(&bits) {}
  // Throws CorruptStream when fewer than `width` bits remain.
  std::uint64_t read(int width);
  std::size_t remaining() const { return bits_->bit_count - pos_; }

 private:
  const BitString* bits_;
  std::size_t pos_ = 0;
};

// Byte-oriented range coder (32-bit range, carry propagation through a
// cached byte). Frequencies must satisfy total <= 2^16.
class RangeEncoder {
 public:
  void encode(std::uint32_t cum_freq, std::uint32_t freq, std::uint32_t total);
  // Equiprobable bits, up to 16 at a time.
  void encode_bits(std::uint32_t value, int width);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  // Returns the cumulative frequency slot of the next symbol.
  std::uint32_t peek(std::uint32_t total);
  void consume(std::uint32_t cum_freq, std::uint32_t freq);
  std::uint32_t decode_bits(int width);

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t step_ = 0;
};

}  // namespace vinr

#endif  // VINR_RANGE_CODER_H_
