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
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "oracles.h"
#include "vinr/errors.h"
#include "vinr/prior_learning.h"

using namespace vinr;

namespace {

INRConfig small_config() {
  INRConfig c;
  c.num_layers = 2;
  c.hidden_units = 8;
  c.fourier_embeddings = 8;
  return c;
}

TrainingSchedule short_schedule(int epochs) {
  TrainingSchedule s;
  s.epochs = epochs;
  s.iters_per_epoch = 40;
  s.first_epoch_iters = 80;
  s.learning_rate = 1e-2;
  return s;
}

PriorModel sample_model() {
  PriorModel m;
  m.config = small_config();
  const std::size_t n = param_count(m.config);
  Rng rng(4);
  std::vector<double> mean(n), var(n), kl(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = rng.normal();
    var[i] = std::exp(rng.normal());
    kl[i] = rng.uniform();
  }
  m.prior = DiagonalGaussian(mean, var);
  m.per_weight_kl_bits = kl;
  m.fourier_seed = 1234;
  m.beta = 1e-3;
  m.c_beta_bits = std::accumulate(kl.begin(), kl.end(), 0.0);
  m.refresh_hash();
  return m;
}

}  // namespace

TEST_CASE("prior file round trip") {
  auto m = sample_model();
  const auto bytes = serialize_prior(m);
  const auto back = deserialize_prior(bytes);
  CHECK(back.config == m.config);
  CHECK(back.prior == m.prior);
  CHECK(back.per_weight_kl_bits == m.per_weight_kl_bits);
  CHECK(back.fourier_seed == m.fourier_seed);
  CHECK(back.beta == m.beta);
  CHECK(back.c_beta_bits == m.c_beta_bits);
  CHECK(back.content_hash == m.content_hash);
  CHECK(!back.index_histogram);

  IndexHistogram h;
  h.add(1);
  h.add(300);
  m.index_histogram = h;
  m.refresh_hash();
  const auto with_hist = deserialize_prior(serialize_prior(m));
  REQUIRE(with_hist.index_histogram);
  CHECK(*with_hist.index_histogram == h);
  CHECK(with_hist.content_hash != back.content_hash);

  const auto path = (std::filesystem::temp_directory_path() / "vinr_prior_test.bin").string();
  save_prior(m, path);
  CHECK(load_prior(path).content_hash == m.content_hash);
  std::filesystem::remove(path);
}

TEST_CASE("prior files reject tampering and truncation") {
  const auto bytes = serialize_prior(sample_model());
  auto flipped = bytes;
  flipped[40] ^= 1;
  CHECK_THROWS_AS(deserialize_prior(flipped), CorruptStream);
  CHECK_THROWS_AS(deserialize_prior(std::span(bytes).first(bytes.size() - 1)), CorruptStream);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_prior(magic), CorruptStream);
  CHECK_THROWS_AS(deserialize_prior(std::vector<std::uint8_t>{1, 2, 3}), CorruptStream);
  CHECK_THROWS_AS(load_prior("/nonexistent/prior.bin"), IoError);
}

TEST_CASE("coding cost and per-weight KL agree") {
  Rng rng(2);
  std::vector<DiagonalGaussian> qs;
  for (int i = 0; i < 3; ++i) {
    qs.emplace_back(std::vector<double>{rng.normal(), rng.normal()},
                    std::vector<double>{0.5, 2.0});
  }
  const DiagonalGaussian p({0.0, 0.0}, {1.0, 1.0});
  const auto per = per_weight_kl(qs, p);
  CHECK(std::accumulate(per.begin(), per.end(), 0.0) ==
        doctest::Approx(estimate_coding_cost(qs, p)));
  double expected = 0.0;
  for (const auto& q : qs) expected += kl_divergence(q, p);
  CHECK(estimate_coding_cost(qs, p) == doctest::Approx(nats_to_bits(expected / 3.0)));
}

TEST_CASE("learned prior is the closed-form update of the final posteriors") {
  std::vector<SignalBatch> data = {testing::synthetic_image(8, 8, 1), testing::synthetic_image(8, 8, 2)};
  const auto r = learn_prior(data, small_config(), 1e-3, short_schedule(2), 5);
  CHECK(r.epochs_run == 2);
  std::vector<DiagonalGaussian> qs;
  for (const auto& p : r.posteriors) qs.push_back(p.distribution());
  // The last recorded prior is the update of the posteriors from the last epoch.
  const auto expected = prior_update(qs);
  CHECK(r.model.prior == expected);
  CHECK(r.model.c_beta_bits == doctest::Approx(estimate_coding_cost(qs, expected)));
  CHECK(r.model.per_weight_kl_bits.size() == param_count(small_config()));
  CHECK(r.model.content_hash == r.model.compute_hash());
  for (double v : r.objective_after_prior) CHECK(std::isfinite(v));
}

TEST_CASE("identical data give identical posteriors") {
  const auto img = testing::synthetic_image(8, 8, 3);
  std::vector<SignalBatch> data = {img, img};
  const auto r = learn_prior(data, small_config(), 1e-3, short_schedule(1), 9);
  CHECK(r.posteriors[0] == r.posteriors[1]);
}

TEST_CASE("training is deterministic and independent of the job count") {
  std::vector<SignalBatch> data = {testing::synthetic_image(8, 8, 4), testing::synthetic_image(8, 8, 5),
                                   testing::synthetic_image(8, 8, 6)};
  auto s = short_schedule(2);
  const auto a = learn_prior(data, small_config(), 1e-3, s, 11);
  s.jobs = 3;
  const auto b = learn_prior(data, small_config(), 1e-3, s, 11);
  CHECK(a.model.content_hash == b.model.content_hash);
  CHECK(a.posteriors == b.posteriors);
}

TEST_CASE("training on a fraction of the points") {
  std::vector<SignalBatch> data = {testing::synthetic_image(8, 8, 4), testing::synthetic_image(8, 8, 5)};
  auto s = short_schedule(2);
  const auto full = learn_prior(data, small_config(), 1e-3, s, 11);
  s.batch_fraction = 0.25;
  const auto a = learn_prior(data, small_config(), 1e-3, s, 11);
  s.jobs = 2;
  const auto b = learn_prior(data, small_config(), 1e-3, s, 11);
  CHECK(a.posteriors == b.posteriors);
  CHECK(a.model.content_hash != full.model.content_hash);
  CHECK(std::isfinite(a.model.c_beta_bits));
  s.batch_fraction = 0.0;
  CHECK_THROWS_AS(learn_prior(data, small_config(), 1e-3, s, 11), InvalidArgument);
}

TEST_CASE("frozen-noise coordinate descent never increases the objective") {
  std::vector<SignalBatch> data;
  for (int i = 0; i < 4; ++i) data.push_back(testing::synthetic_image(8, 8, 20 + i));
  auto s = short_schedule(4);
  s.frozen_noise = true;
  const auto r = learn_prior(data, small_config(), 1e-3, s, 3);
  REQUIRE(r.objective_after_prior.size() == 4);
  for (std::size_t e = 0; e < 4; ++e) {
    CHECK(r.objective_after_prior[e] <= r.objective_after_posteriors[e] + 1e-12);
    if (e > 0) CHECK(r.objective_after_posteriors[e] <= r.objective_after_prior[e - 1] + 1e-12);
  }
}

TEST_CASE("early stopping ends training before the epoch limit") {
  std::vector<SignalBatch> data = {testing::synthetic_image(8, 8, 7)};
  auto s = short_schedule(50);
  s.early_stop_tolerance = 0.5;
  const auto r = learn_prior(data, small_config(), 1e-3, s, 1);
  CHECK(r.epochs_run < 50);
}

TEST_CASE("training rejects bad input") {
  std::vector<SignalBatch> none;
  CHECK_THROWS_AS(learn_prior(none, small_config(), 1e-3, short_schedule(1), 0), InvalidArgument);
  std::vector<SignalBatch> data = {testing::synthetic_image(8, 8, 1)};
  CHECK_THROWS_AS(learn_prior(data, small_config(), 0.0, short_schedule(1), 0), InvalidArgument);
  CHECK_THROWS_AS(learn_prior(data, small_config(), 1e-3, short_schedule(0), 0), InvalidArgument);
  auto gray = small_config();
  gray.output_dim = 1;
  CHECK_THROWS_AS(learn_prior(data, gray, 1e-3, short_schedule(1), 0), InvalidArgument);
}
