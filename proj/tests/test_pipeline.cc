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
#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "oracles.h"
#include "vinr/errors.h"
#include "vinr/pipeline.h"

using namespace vinr;

namespace {

const PriorModel& fixture_prior() {
  static const PriorModel model = [] {
    INRConfig c;
    c.num_layers = 2;
    c.hidden_units = 8;
    c.fourier_embeddings = 8;
    std::vector<SignalBatch> data;
    for (int i = 0; i < 3; ++i) data.push_back(testing::synthetic_image(8, 8, 100 + i));
    TrainingSchedule s;
    s.epochs = 4;
    s.iters_per_epoch = 60;
    s.first_epoch_iters = 150;
    s.learning_rate = 1e-2;
    return learn_prior(data, c, 1e-3, s, 7).model;
  }();
  return model;
}

CompressionSettings quick_settings(std::uint64_t seed) {
  CompressionSettings s;
  s.fine_tune.fit_iterations = 10000;
  s.fine_tune.inter_block_iterations = 5;
  s.fine_tune.learning_rate = 1e-3;
  s.seed = seed;
  return s;
}

CompressedObject random_object(Rng& rng) {
  CompressedObject o;
  auto& h = o.header;
  h.config.num_layers = 2 + static_cast<int>(rng.below(4));
  h.config.hidden_units = 1 + static_cast<int>(rng.below(64));
  h.config.frequency_scale = rng.uniform() * 20;
  for (auto& b : h.prior_hash) b = static_cast<std::uint8_t>(rng.below(256));
  h.signal = rng.below(2) ? image_descriptor(1 + rng.below(64), 1 + rng.below(64), 3)
                          : audio_descriptor(1 + rng.below(100000), 16000);
  h.config.input_dim = h.signal.input_dim();
  h.config.output_dim = h.signal.output_dim();
  h.rec_seed = rng.next_u64();
  h.t_bits = rng.uniform() * 4;
  h.kappa_bits = 8 + rng.uniform() * 16;
  h.permutation_seed = rng.next_u64();
  h.histogram_coded = rng.below(2) == 1;
  h.proposals = rng.below(2) ? ProposalKind::kSobol : ProposalKind::kPseudoRandom;
  const std::size_t k = rng.below(50);
  for (std::size_t i = 0; i < k; ++i) {
    h.index_widths.push_back(static_cast<std::uint8_t>(rng.below(4) ? 16 : rng.below(25)));
  }
  BitWriter w;
  const int bits = static_cast<int>(rng.below(200));
  for (int i = 0; i < bits; ++i) w.write(rng.below(2), 1);
  o.payload = w.finish();
  return o;
}

}  // namespace

TEST_CASE("compressed objects round trip through bytes") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto o = random_object(rng);
    const auto bytes = serialize_compressed(o);
    CHECK(deserialize_compressed(bytes) == o);
    CHECK(serialize_compressed(deserialize_compressed(bytes)) == bytes);
  }
}

TEST_CASE("damaged streams are rejected") {
  Rng rng(2);
  const auto bytes = serialize_compressed(random_object(rng));
  for (std::size_t i = 0; i < bytes.size(); i += 7) {
    auto bad = bytes;
    bad[i] ^= 0x10;
    CHECK_THROWS_AS(deserialize_compressed(bad), CorruptStream);
  }
  CHECK_THROWS_AS(deserialize_compressed(std::span(bytes).first(bytes.size() - 3)), CorruptStream);
  CHECK_THROWS_AS(deserialize_compressed(std::vector<std::uint8_t>{'C', 'M'}), CorruptStream);
}

TEST_CASE("rate control moves lambda only outside the buffer") {
  std::vector<double> lambdas = {1.0, 1.0, 1.0, 1.0, 1.0};
  const std::vector<double> kl = {17.0, 15.6, 16.0, 15.0, 30.0};
  adjust_lambdas(lambdas, kl, 16.0, 1.05, 0.4, {false, false, false, false, true});
  CHECK(lambdas[0] == doctest::Approx(1.05));
  CHECK(lambdas[1] == 1.0);
  CHECK(lambdas[2] == 1.0);
  CHECK(lambdas[3] == doctest::Approx(1.0 / 1.05));
  CHECK(lambdas[4] == 1.0);
}

TEST_CASE("lambda floor bounds the rate weights from below") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 70);
  auto s = quick_settings(1).fine_tune;
  s.lambda_init = 1e-3;
  s.lambda_floor = 0.5;
  // A huge budget keeps every block under kappa, so rate control only lowers
  // lambda.
  const auto partition = stream_partition(prior, 1e6, 3);
  const InrModel model(prior.config, prior.fourier_seed);
  PosteriorFitter fitter(model, datum, prior.prior, partition, s, prior.beta, 4);
  fitter.run(600);
  for (double l : fitter.lambdas()) CHECK(l == doctest::Approx(5e-4));
}

TEST_CASE("bounded fine-tuning undoes a step that overshoots the limit") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 71);
  const auto partition = stream_partition(prior, 16.0, 3);
  const InrModel model(prior.config, prior.fourier_seed);
  PosteriorFitter fitter(model, datum, prior.prior, partition, quick_settings(1).fine_tune,
                         prior.beta, 4);
  fitter.run(200);
  const auto kl = fitter.block_kl_bits();
  const double top = *std::max_element(kl.begin(), kl.end());

  const auto snapshot = fitter.posterior();
  CHECK(fitter.run_bounded(10, top - 1e-3) == 0);
  CHECK(fitter.posterior().mean == snapshot.mean);
  CHECK(fitter.posterior().log_variance == snapshot.log_variance);
  CHECK(fitter.iterations_run() == 200);

  CHECK(fitter.run_bounded(10, 1e9) == 10);
  CHECK(fitter.iterations_run() == 210);
}

TEST_CASE("frozen blocks never change during fine-tuning") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 50);
  const auto partition = stream_partition(prior, 16.0, 3);
  REQUIRE(partition.num_blocks() >= 3);
  const InrModel model(prior.config, prior.fourier_seed);
  FineTuneSettings s;
  s.learning_rate = 1e-2;
  PosteriorFitter fitter(model, datum, prior.prior, partition, s, prior.beta, 1);
  fitter.run(30);
  fitter.freeze(0, std::vector<double>(partition.blocks[0].size(), 0.1));
  fitter.freeze(1, std::vector<double>(partition.blocks[1].size(), -0.1));
  const auto snapshot = fitter.posterior();
  const auto lambdas = fitter.lambdas();
  fitter.run(60);
  for (std::size_t k : {0, 1}) {
    CHECK(fitter.lambdas()[k] == lambdas[k]);
    for (std::size_t i : partition.blocks[k]) {
      CHECK(fitter.posterior().mean[i] == snapshot.mean[i]);
      CHECK(fitter.posterior().log_variance[i] == snapshot.log_variance[i]);
    }
  }
  bool moved = false;
  for (std::size_t i : partition.blocks[2]) moved |= fitter.posterior().mean[i] != snapshot.mean[i];
  CHECK(moved);
}

TEST_CASE("compress then decompress is bit exact") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 60);
  const auto desc = image_descriptor(8, 8, 3);
  const auto result = compress(datum, desc, prior, quick_settings(4));
  const auto bytes = serialize_compressed(result.object);
  const auto decoded = decompress(deserialize_compressed(bytes), prior);
  CHECK(decoded == result.reconstruction);
  std::size_t expected_bits = 0;
  for (const auto& b : result.blocks) expected_bits += index_width(b.n_samples);
  CHECK(result.object.payload.bit_count == expected_bits);
  CHECK(result.object.header.num_blocks() == stream_partition(prior, 16.0, result.object.header.permutation_seed).num_blocks());

  const InrModel model(prior.config, prior.fourier_seed);
  CHECK(model.forward(result.weights, datum.coords) == result.reconstruction);
}

TEST_CASE("a single block degenerates to plain A* coding") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 61);
  auto s = quick_settings(5);
  s.kappa_bits = 1e9;
  // Start on the prior and penalize the rate hard so that the whole weight
  // vector fits in one block below the sample cap.
  s.fine_tune.posterior_var_init = 1e9;
  s.fine_tune.fit_iterations = 30;
  s.fine_tune.lambda_init = 1e3;
  s.t_bits = 3.0;
  const auto result = compress(datum, image_descriptor(8, 8, 3), prior, s);
  CHECK(result.object.header.num_blocks() == 1);
  CHECK(result.blocks[0].n_samples >= 8);
  CHECK(decompress(result.object, prior) == result.reconstruction);
}

TEST_CASE("extra overhead bits add t bits per block") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 63);
  auto s = quick_settings(6);
  s.fine_tune.inter_block_iterations = 0;
  const auto base = compress(datum, image_descriptor(8, 8, 3), prior, s);
  s.t_bits = 1.0;
  const auto more = compress(datum, image_descriptor(8, 8, 3), prior, s);
  CHECK(more.object.payload.bit_count ==
        base.object.payload.bit_count + base.object.header.num_blocks());
  CHECK(decompress(more.object, prior) == more.reconstruction);
}

TEST_CASE("histogram-coded and Sobol streams decode") {
  auto prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 64);
  const auto first = compress(datum, image_descriptor(8, 8, 3), prior, quick_settings(7));
  prior.index_histogram = build_index_histogram(first.blocks);
  prior.refresh_hash();
  auto s = quick_settings(7);
  s.use_histogram = true;
  s.proposals = ProposalKind::kSobol;
  const auto coded = compress(datum, image_descriptor(8, 8, 3), prior, s);
  CHECK(coded.object.header.histogram_coded);
  CHECK(decompress(deserialize_compressed(serialize_compressed(coded.object)), prior) ==
        coded.reconstruction);
  CHECK_THROWS_AS(compress(datum, image_descriptor(8, 8, 3), fixture_prior(), s), InvalidArgument);
}

TEST_CASE("fitting on a fraction of the points still decodes") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 60);
  auto s = quick_settings(12);
  s.fine_tune.batch_fraction = 0.5;
  const auto result = compress(datum, image_descriptor(8, 8, 3), prior, s);
  CHECK(decompress(result.object, prior) == result.reconstruction);
  s.fine_tune.batch_fraction = 2.0;
  CHECK_THROWS_AS(compress(datum, image_descriptor(8, 8, 3), prior, s), InvalidArgument);
}

TEST_CASE("decompression checks the prior") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 65);
  const auto result = compress(datum, image_descriptor(8, 8, 3), prior, quick_settings(8));
  auto other = prior;
  other.beta *= 2;
  other.refresh_hash();
  CHECK_THROWS_AS(decompress(result.object, other), WrongPrior);
  auto truncated = result.object;
  truncated.payload.bit_count -= 1;
  CHECK_THROWS_AS(decompress(truncated, prior), CorruptStream);
}

TEST_CASE("exact posterior sampling yields a reconstruction") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 66);
  auto s = quick_settings(9);
  s.mode = EncodeMode::kExactPosteriorSample;
  const auto r = compress(datum, image_descriptor(8, 8, 3), prior, s);
  CHECK(r.reconstruction.rows() == 64);
  CHECK(r.reconstruction.allFinite());
}

TEST_CASE("fitting reports divergence with the iteration") {
  auto prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 67);
  auto s = quick_settings(10);
  s.fine_tune.learning_rate = 1e300;
  try {
    compress(datum, image_descriptor(8, 8, 3), prior, s);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("compression rejects mismatched signals") {
  const auto& prior = fixture_prior();
  const auto datum = testing::synthetic_image(8, 8, 68);
  CHECK_THROWS_AS(compress(datum, image_descriptor(4, 16, 3), prior, quick_settings(1)).object,
                  InvalidArgument);
  CHECK_THROWS_AS(compress(datum, image_descriptor(8, 9, 3), prior, quick_settings(1)).object,
                  InvalidArgument);
}

TEST_CASE("metrics") {
  CompressedObject o;
  o.header.signal = image_descriptor(4, 4, 1);
  o.header.config.output_dim = 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(16, 1, 0.5);
  const auto same = measure(o, a, a);
  CHECK(same.mse == 0.0);
  CHECK(std::isinf(same.psnr_db));
  CHECK(same.bits_total == 8.0 * serialize_compressed(o).size());
  CHECK(same.bits_per_unit == same.bits_total / 16.0);
  CHECK(psnr(1.0) == 0.0);
  CHECK(psnr(0.01) == doctest::Approx(20.0));
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(16, 1, 0.4);
  CHECK(measure(o, b, a).mse == doctest::Approx(0.01));
  CHECK_THROWS_AS(measure(o, Eigen::MatrixXd::Zero(15, 1), a), InvalidArgument);
  o.header.signal = audio_descriptor(32000, 16000);
  const Eigen::MatrixXd s = Eigen::MatrixXd::Zero(32000, 1);
  CHECK(measure(o, s, s).bits_per_unit == doctest::Approx(measure(o, s, s).bits_total / 2.0));
}
