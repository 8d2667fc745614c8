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

#ifndef VINR_DATA_IO_H_
#define VINR_DATA_IO_H_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "vinr/inr_model.h"

namespace vinr {

enum class SignalKind : std::uint8_t { kImage = 0, kAudio = 1 };

// Shape of a signal. Images use height/width/channels; audio uses
// num_samples and sample_rate (always one channel).
struct SignalDescriptor {
  SignalKind kind = SignalKind::kImage;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::uint64_t num_samples = 0;
  std::uint32_t sample_rate = 0;

  void validate() const;
  std::size_t num_points() const;
  int input_dim() const { return kind == SignalKind::kImage ? 2 : 1; }
  int output_dim() const { return kind == SignalKind::kImage ? static_cast<int>(channels) : 1; }
  // Pixel count for images, duration in seconds for audio.
  double extent() const;

  friend bool operator==(const SignalDescriptor&, const SignalDescriptor&) = default;
};

SignalDescriptor image_descriptor(std::uint32_t height, std::uint32_t width,
                                  std::uint32_t channels);
SignalDescriptor audio_descriptor(std::uint64_t num_samples, std::uint32_t sample_rate);

// Regular endpoint-inclusive grid in [-1, 1] per axis. Image points are in
// row-major pixel order with (row, column) coordinates; a single-point axis
// maps to 0.
Eigen::MatrixXd coordinate_grid(const SignalDescriptor& descriptor);

struct LoadedSignal {
  SignalBatch batch;
  SignalDescriptor descriptor;
};

// PNG, binary PPM/PGM (8-bit) or mono PCM16 WAV, chosen by file extension.
// Image values map to [0, 1] by v / 255; audio PCM s maps to (s / 32768 + 1) / 2.
LoadedSignal load_signal(const std::string& path);

// Clamps predictions to [0, 1] and quantizes to the container's depth.
void save_signal(const Eigen::MatrixXd& predictions, const SignalDescriptor& descriptor,
                 const std::string& path);

// Builds a batch from 8-bit interleaved pixels.
SignalBatch image_batch(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                        const std::vector<std::uint8_t>& pixels);

// Builds a batch from PCM16 samples.
SignalBatch audio_batch(const std::vector<std::int16_t>& samples);

std::vector<std::uint8_t> quantize_pixels(const Eigen::MatrixXd& predictions);
std::vector<std::int16_t> quantize_audio(const Eigen::MatrixXd& predictions);

}  // namespace vinr

#endif  // VINR_DATA_IO_H_
