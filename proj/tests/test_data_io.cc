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
#include <filesystem>

#include "doctest.h"
#include "vinr/binary_io.h"
#include "vinr/data_io.h"
#include "vinr/errors.h"
#include "vinr/random.h"

using namespace vinr;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vinr_test_" + name)).string();
}

Eigen::MatrixXd random_pixels(Rng& rng, std::uint32_t h, std::uint32_t w, std::uint32_t c) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * w * c);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng.below(256));
  return image_batch(h, w, c, px).targets;
}

}  // namespace

TEST_CASE("2x2 grid sits on the corners") {
  const auto g = coordinate_grid(image_descriptor(2, 2, 3));
  REQUIRE(g.rows() == 4);
  CHECK(g(0, 0) == -1.0);
  CHECK(g(0, 1) == -1.0);
  CHECK(g(1, 0) == -1.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(2, 0) == 1.0);
  CHECK(g(2, 1) == -1.0);
  CHECK(g(3, 0) == 1.0);
  CHECK(g(3, 1) == 1.0);
}

TEST_CASE("single-point axes map to zero") {
  const auto g = coordinate_grid(image_descriptor(1, 5, 1));
  for (int r = 0; r < 5; ++r) CHECK(g(r, 0) == 0.0);
  CHECK(g(0, 1) == -1.0);
  CHECK(g(2, 1) == 0.0);
  CHECK(g(4, 1) == 1.0);
  CHECK(coordinate_grid(audio_descriptor(1, 16000))(0, 0) == 0.0);
}

TEST_CASE("descriptor validation") {
  CHECK_THROWS_AS(image_descriptor(0, 3, 3), InvalidArgument);
  CHECK_THROWS_AS(image_descriptor(3, 3, 2), InvalidArgument);
  CHECK_THROWS_AS(audio_descriptor(10, 0), InvalidArgument);
  CHECK(audio_descriptor(48000, 16000).extent() == 3.0);
  CHECK(image_descriptor(4, 8, 3).extent() == 32.0);
}

TEST_CASE("PNG and PPM round trips are lossless") {
  Rng rng(1);
  for (const auto& [name, channels] : {std::pair{"rgb.png", 3u}, {"gray.png", 1u},
                                       {"rgb.ppm", 3u}, {"gray.pgm", 1u}}) {
    const auto desc = image_descriptor(7, 5, channels);
    const auto values = random_pixels(rng, 7, 5, channels);
    const auto path = temp_path(name);
    save_signal(values, desc, path);
    const auto loaded = load_signal(path);
    CHECK(loaded.descriptor == desc);
    CHECK(loaded.batch.targets == values);
    CHECK(loaded.batch.coords == coordinate_grid(desc));
    std::filesystem::remove(path);
  }
}

TEST_CASE("saving clamps out-of-range predictions") {
  Eigen::MatrixXd v(2, 1);
  v << 1.7, -0.3;
  const auto px = quantize_pixels(v);
  CHECK(px[0] == 255);
  CHECK(px[1] == 0);
  const auto pcm = quantize_audio(v);
  CHECK(pcm[0] == 32767);
  CHECK(pcm[1] == -32768);
}

TEST_CASE("WAV round trip and sample count") {
  Rng rng(2);
  std::vector<std::int16_t> pcm(48000);
  for (auto& s : pcm) s = static_cast<std::int16_t>(static_cast<int>(rng.below(65536)) - 32768);
  const auto batch = audio_batch(pcm);
  const auto desc = audio_descriptor(pcm.size(), 16000);
  const auto path = temp_path("audio.wav");
  save_signal(batch.targets, desc, path);
  const auto loaded = load_signal(path);
  CHECK(loaded.descriptor == desc);
  CHECK(loaded.batch.coords.rows() == 48000);
  CHECK(loaded.batch.targets == batch.targets);
  CHECK(quantize_audio(loaded.batch.targets) == pcm);
  std::filesystem::remove(path);
}

TEST_CASE("audio de-normalization inverts the load map within one LSB") {
  Rng rng(3);
  Eigen::MatrixXd v(1000, 1);
  for (int i = 0; i < 1000; ++i) v(i, 0) = rng.uniform();
  const auto pcm = quantize_audio(v);
  const auto back = audio_batch(pcm).targets;
  for (int i = 0; i < 1000; ++i) CHECK(std::fabs(back(i, 0) - v(i, 0)) <= 1.0 / 65536.0);
}

TEST_CASE("unsupported or corrupt files are rejected") {
  CHECK_THROWS_AS(load_signal("image.bmp"), IoError);
  CHECK_THROWS_AS(load_signal(temp_path("missing.png")), IoError);
  const auto bad_png = temp_path("bad.png");
  write_file(bad_png, std::vector<std::uint8_t>{0x89, 'P', 'N', 'G', 1, 2, 3});
  CHECK_THROWS_AS(load_signal(bad_png), IoError);
  const auto bad_ppm = temp_path("bad.ppm");
  const std::string text = "P6\n4 4\n255\nabc";
  write_file(bad_ppm, std::vector<std::uint8_t>(text.begin(), text.end()));
  CHECK_THROWS_AS(load_signal(bad_ppm), IoError);
  const auto bad_wav = temp_path("bad.wav");
  write_file(bad_wav, std::vector<std::uint8_t>{'R', 'I', 'F', 'F', 0, 0});
  CHECK_THROWS_AS(load_signal(bad_wav), IoError);
  for (const auto& p : {bad_png, bad_ppm, bad_wav}) std::filesystem::remove(p);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 3);
  CHECK_THROWS_AS(save_signal(v, image_descriptor(2, 2, 3), temp_path("x.bmp")), IoError);
  CHECK_THROWS_AS(save_signal(v, image_descriptor(3, 2, 3), temp_path("x.png")), InvalidArgument);
}
