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

#include "vinr/data_io.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "vinr/binary_io.h"
#include "vinr/errors.h"

namespace vinr {
namespace {

double grid_coordinate(std::uint64_t i, std::uint64_t n) {
  if (n <= 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

std::string extension_of(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

LoadedSignal load_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::uint32_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("corrupt PNG " + path + ": " + message);
  }
  return {image_batch(image.height, image.width, channels, pixels),
          image_descriptor(image.height, image.width, channels)};
}

void save_png(const std::vector<std::uint8_t>& pixels, const SignalDescriptor& d,
              const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = d.width;
  image.height = d.height;
  image.format = d.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path + ": " + image.message);
  }
}

// Reads the next whitespace-separated header token, skipping comments.
std::string pnm_token(ByteReader& in) {
  std::string token;
  while (true) {
    const char c = static_cast<char>(in.u8());
    if (c == '#') {
      while (in.u8() != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(c);
  }
}

LoadedSignal load_pnm(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    ByteReader in(bytes);
    const std::string magic = pnm_token(in);
    if (magic != "P6" && magic != "P5") throw IoError("unsupported PNM variant in " + path);
    const std::uint32_t channels = magic == "P6" ? 3 : 1;
    const long width = std::stol(pnm_token(in));
    const long height = std::stol(pnm_token(in));
    const long maxval = std::stol(pnm_token(in));
    if (width <= 0 || height <= 0 || maxval != 255) {
      throw IoError("unsupported PNM geometry or depth in " + path);
    }
    const auto data = in.raw(static_cast<std::size_t>(width * height) * channels);
    const std::vector<std::uint8_t> pixels(data.begin(), data.end());
    const auto h = static_cast<std::uint32_t>(height), w = static_cast<std::uint32_t>(width);
    return {image_batch(h, w, channels, pixels), image_descriptor(h, w, channels)};
  } catch (const CorruptStream&) {
    throw IoError("truncated PNM file " + path);
  } catch (const std::invalid_argument&) {
    throw IoError("malformed PNM header in " + path);
  }
}

void save_pnm(const std::vector<std::uint8_t>& pixels, const SignalDescriptor& d,
              const std::string& path) {
  std::ostringstream header;
  header << (d.channels == 3 ? "P6" : "P5") << "\n" << d.width << " " << d.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  write_file(path, bytes);
}

LoadedSignal load_wav(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    ByteReader in(bytes);
    const auto riff = in.raw(4);
    in.u32();
    const auto wave = in.raw(4);
    if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(wave.data(), "WAVE", 4) != 0) {
      throw IoError("not a RIFF/WAVE file: " + path);
    }
    bool have_fmt = false;
    std::uint32_t sample_rate = 0;
    while (true) {
      const auto id = in.raw(4);
      const std::uint32_t size = in.u32();
      if (std::memcmp(id.data(), "fmt ", 4) == 0) {
        ByteReader fmt(in.raw(size));
        const std::uint16_t format = fmt.u16();
        const std::uint16_t channels = fmt.u16();
        sample_rate = fmt.u32();
        fmt.u32();
        fmt.u16();
        const std::uint16_t bits = fmt.u16();
        if (format != 1 || channels != 1 || bits != 16) {
          throw IoError("only mono PCM16 WAV is supported: " + path);
        }
        have_fmt = true;
      } else if (std::memcmp(id.data(), "data", 4) == 0) {
        if (!have_fmt || sample_rate == 0) throw IoError("WAV data before fmt chunk: " + path);
        ByteReader data(in.raw(size - size % 2));
        std::vector<std::int16_t> samples(size / 2);
        for (auto& s : samples) s = static_cast<std::int16_t>(data.u16());
        if (samples.empty()) throw IoError("empty WAV file: " + path);
        return {audio_batch(samples), audio_descriptor(samples.size(), sample_rate)};
      } else {
        in.raw(size + size % 2);
      }
    }
  } catch (const CorruptStream&) {
    throw IoError("truncated WAV file " + path);
  }
}

void save_wav(const std::vector<std::int16_t>& samples, std::uint32_t sample_rate,
              const std::string& path) {
  ByteWriter out;
  const auto data_size = static_cast<std::uint32_t>(samples.size() * 2);
  out.raw({reinterpret_cast<const std::uint8_t*>("RIFF"), 4});
  out.u32(36 + data_size);
  out.raw({reinterpret_cast<const std::uint8_t*>("WAVEfmt "), 8});
  out.u32(16);
  out.u16(1);
  out.u16(1);
  out.u32(sample_rate);
  out.u32(sample_rate * 2);
  out.u16(2);
  out.u16(16);
  out.raw({reinterpret_cast<const std::uint8_t*>("data"), 4});
  out.u32(data_size);
  for (std::int16_t s : samples) out.u16(static_cast<std::uint16_t>(s));
  write_file(path, out.bytes());
}

}  // namespace

void SignalDescriptor::validate() const {
  if (kind == SignalKind::kImage) {
    if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidArgument("images need 1 or 3 channels");
  } else {
    if (num_samples == 0) throw InvalidArgument("audio needs at least one sample");
    if (sample_rate == 0) throw InvalidArgument("audio requires a sample rate");
  }
}

std::size_t SignalDescriptor::num_points() const {
  return kind == SignalKind::kImage ? static_cast<std::size_t>(height) * width
                                    : static_cast<std::size_t>(num_samples);
}

double SignalDescriptor::extent() const {
  return kind == SignalKind::kImage ? static_cast<double>(num_points())
                                    : static_cast<double>(num_samples) / sample_rate;
}

SignalDescriptor image_descriptor(std::uint32_t height, std::uint32_t width,
                                  std::uint32_t channels) {
  SignalDescriptor d;
  d.kind = SignalKind::kImage;
  d.height = height;
  d.width = width;
  d.channels = channels;
  d.validate();
  return d;
}

SignalDescriptor audio_descriptor(std::uint64_t num_samples, std::uint32_t sample_rate) {
  SignalDescriptor d;
  d.kind = SignalKind::kAudio;
  d.channels = 1;
  d.num_samples = num_samples;
  d.sample_rate = sample_rate;
  d.validate();
  return d;
}

Eigen::MatrixXd coordinate_grid(const SignalDescriptor& d) {
  d.validate();
  if (d.kind == SignalKind::kAudio) {
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(d.num_samples), 1);
    for (std::uint64_t i = 0; i < d.num_samples; ++i) {
      coords(static_cast<Eigen::Index>(i), 0) = grid_coordinate(i, d.num_samples);
    }
    return coords;
  }
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(d.num_points()), 2);
  Eigen::Index p = 0;
  for (std::uint32_t r = 0; r < d.height; ++r) {
    for (std::uint32_t c = 0; c < d.width; ++c, ++p) {
      coords(p, 0) = grid_coordinate(r, d.height);
      coords(p, 1) = grid_coordinate(c, d.width);
    }
  }
  return coords;
}

SignalBatch image_batch(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                        const std::vector<std::uint8_t>& pixels) {
  const auto d = image_descriptor(height, width, channels);
  if (pixels.size() != d.num_points() * channels) throw InvalidArgument("pixel count mismatch");
  SignalBatch batch;
  batch.coords = coordinate_grid(d);
  batch.targets.resize(static_cast<Eigen::Index>(d.num_points()), channels);
  for (std::size_t p = 0; p < d.num_points(); ++p) {
    for (std::uint32_t c = 0; c < channels; ++c) {
      batch.targets(static_cast<Eigen::Index>(p), c) = pixels[p * channels + c] / 255.0;
    }
  }
  return batch;
}

SignalBatch audio_batch(const std::vector<std::int16_t>& samples) {
  const auto d = audio_descriptor(samples.size(), 1);
  SignalBatch batch;
  batch.coords = coordinate_grid(d);
  batch.targets.resize(static_cast<Eigen::Index>(samples.size()), 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    batch.targets(static_cast<Eigen::Index>(i), 0) = (samples[i] / 32768.0 + 1.0) / 2.0;
  }
  return batch;
}

std::vector<std::uint8_t> quantize_pixels(const Eigen::MatrixXd& predictions) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(predictions.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
      const double v = std::clamp(predictions(r, c), 0.0, 1.0);
      out[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return out;
}

std::vector<std::int16_t> quantize_audio(const Eigen::MatrixXd& predictions) {
  std::vector<std::int16_t> out(static_cast<std::size_t>(predictions.rows()));
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    const double v = std::clamp(predictions(r, 0), 0.0, 1.0);
    const long s = std::lround((2.0 * v - 1.0) * 32768.0);
    out[static_cast<std::size_t>(r)] = static_cast<std::int16_t>(std::clamp(s, -32768L, 32767L));
  }
  return out;
}

LoadedSignal load_signal(const std::string& path) {
  const std::string ext = extension_of(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return load_pnm(path);
  if (ext == ".wav") return load_wav(path);
  throw IoError("unsupported signal format: " + path);
}

void save_signal(const Eigen::MatrixXd& predictions, const SignalDescriptor& descriptor,
                 const std::string& path) {
  descriptor.validate();
  if (static_cast<std::size_t>(predictions.rows()) != descriptor.num_points() ||
      predictions.cols() != descriptor.output_dim()) {
    throw InvalidArgument("prediction shape does not match the signal descriptor");
  }
  const std::string ext = extension_of(path);
  if (descriptor.kind == SignalKind::kAudio) {
    if (ext != ".wav") throw IoError("audio must be saved as .wav: " + path);
    save_wav(quantize_audio(predictions), descriptor.sample_rate, path);
    return;
  }
  const auto pixels = quantize_pixels(predictions);
  if (ext == ".png") {
    save_png(pixels, descriptor, path);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    save_pnm(pixels, descriptor, path);
  } else {
    throw IoError("unsupported image format: " + path);
  }
}

}  // namespace vinr
