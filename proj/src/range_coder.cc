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

#include "vinr/range_coder.h"

#include <algorithm>

#include "vinr/errors.h"

namespace vinr {
namespace {

constexpr std::uint32_t kTop = 1u << 24;

}  // namespace

void BitWriter::write(std::uint64_t value, int width) {
  for (int b = width - 1; b >= 0; --b) {
    if (out_.bit_count % 8 == 0) out_.bytes.push_back(0);
    if ((value >> b) & 1u) {
      out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (out_.bit_count % 8));
    }
    ++out_.bit_count;
  }
}

std::uint64_t BitReader::read(int width) {
  if (static_cast<std::size_t>(width) > remaining()) {
    throw CorruptStream("bit string truncated");
  }
  std::uint64_t value = 0;
  for (int b = 0; b < width; ++b, ++pos_) {
    value = (value << 1) | ((bits_->bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
  }
  return value;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(std::uint32_t cum_freq, std::uint32_t freq, std::uint32_t total) {
  const std::uint32_t r = range_ / total;
  low_ += static_cast<std::uint64_t>(r) * cum_freq;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_bits(std::uint32_t value, int width) {
  while (width > 0) {
    const int chunk = std::min(width, 16);
    width -= chunk;
    const std::uint32_t part = (value >> width) & ((1u << chunk) - 1u);
    encode(part, 1, 1u << chunk);
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  // The first byte emitted is always the initial zero cache.
  out_.erase(out_.begin());
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw CorruptStream("range-coded payload truncated");
  return bytes_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::uint32_t RangeDecoder::peek(std::uint32_t total) {
  step_ = range_ / total;
  const std::uint32_t slot = code_ / step_;
  if (slot >= total) throw CorruptStream("range-coded payload is malformed");
  return slot;
}

void RangeDecoder::consume(std::uint32_t cum_freq, std::uint32_t freq) {
  code_ -= step_ * cum_freq;
  range_ = step_ * freq;
  normalize();
}

std::uint32_t RangeDecoder::decode_bits(int width) {
  std::uint32_t value = 0;
  while (width > 0) {
    const int chunk = std::min(width, 16);
    width -= chunk;
    const std::uint32_t part = peek(1u << chunk);
    consume(part, 1);
    value = (value << chunk) | part;
  }
  return value;
}

}  // namespace vinr
