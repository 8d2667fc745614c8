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

#include "vinr/prior_learning.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>

#include "vinr/adam.h"
#include "vinr/errors.h"

namespace vinr {
namespace {

constexpr char kPriorMagic[4] = {'C', 'M', 'B', 'R'};
constexpr std::size_t kMaxParams = std::size_t{1} << 28;

std::vector<std::uint8_t> serialize_body(const PriorModel& m) {
  ByteWriter out;
  out.raw({reinterpret_cast<const std::uint8_t*>(kPriorMagic), 4});
  out.u16(kPriorFormatVersion);
  write_inr_config(out, m.config);
  out.u64(m.fourier_seed);
  out.f64(m.beta);
  out.f64(m.c_beta_bits);
  write_gaussian(out, m.prior);
  out.f64_array(m.per_weight_kl_bits);
  out.u8(m.index_histogram ? 1 : 0);
  if (m.index_histogram) {
    for (std::uint32_t c : m.index_histogram->counts) out.u32(c);
  }
  return out.take();
}

// One datum's posterior optimization state, persistent across epochs.
struct DatumState {
  Eigen::MatrixXd embedded;
  const Eigen::MatrixXd* targets = nullptr;
  VariationalParams posterior;
  Adam adam;
  Rng noise;
};

void optimize_posterior(const InrModel& model, DatumState& state, const DiagonalGaussian& prior,
                        double beta, int iterations, bool frozen_noise, double batch_fraction,
                        std::uint64_t noise_seed, int epoch) {
  const auto partition = BlockPartition::single_block(model.num_params());
  const auto frozen = FrozenBlocks::none(1, model.num_params());
  const std::size_t n_points = static_cast<std::size_t>(state.embedded.rows());
  const bool subsample = batch_fraction < 1.0;
  Eigen::MatrixXd sub_embedded, sub_targets;
  double lambdas[1] = {beta};

  VariationalParams best;
  double best_loss = std::numeric_limits<double>::infinity();
  // Under frozen noise the loop runs one extra pass that only scores the
  // final iterate.
  const int passes = frozen_noise ? iterations + 1 : iterations;
  for (int it = 0; it < passes; ++it) {
    Rng step_noise(noise_seed);
    Rng& noise = frozen_noise ? step_noise : state.noise;
    const Eigen::MatrixXd* embedded = &state.embedded;
    const Eigen::MatrixXd* targets = state.targets;
    if (subsample) {
      const auto rows = sample_rows(n_points, batch_fraction, noise);
      sub_embedded = state.embedded(rows, Eigen::all);
      sub_targets = (*state.targets)(rows, Eigen::all);
      embedded = &sub_embedded;
      targets = &sub_targets;
      lambdas[0] = beta * static_cast<double>(rows.size()) / static_cast<double>(n_points);
    }
    LossAndGrads lg;
    try {
      lg = model.loss_and_grads(state.posterior, prior, *embedded, *targets, lambdas, partition,
                                frozen, noise);
    } catch (const DivergenceError&) {
      throw DivergenceError("posterior optimization diverged in epoch " + std::to_string(epoch) +
                            " at iteration " + std::to_string(it));
    }
    if (frozen_noise && lg.total < best_loss) {
      best_loss = lg.total;
      best = state.posterior;
    }
    if (it == iterations) break;
    state.adam.step(state.posterior, lg.grad_mean, lg.grad_log_variance);
  }
  if (frozen_noise) state.posterior = std::move(best);
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<DiagonalGaussian> distributions(std::span<const VariationalParams> posteriors) {
  std::vector<DiagonalGaussian> out;
  out.reserve(posteriors.size());
  for (const auto& p : posteriors) out.push_back(p.distribution());
  return out;
}

}  // namespace

void write_inr_config(ByteWriter& out, const INRConfig& c) {
  out.u32(static_cast<std::uint32_t>(c.input_dim));
  out.u32(static_cast<std::uint32_t>(c.output_dim));
  out.u32(static_cast<std::uint32_t>(c.num_layers));
  out.u32(static_cast<std::uint32_t>(c.hidden_units));
  out.u32(static_cast<std::uint32_t>(c.fourier_embeddings));
  out.f64(c.frequency_scale);
  out.f64(c.omega0);
}

INRConfig read_inr_config(ByteReader& in) {
  INRConfig c;
  c.input_dim = static_cast<int>(in.u32());
  c.output_dim = static_cast<int>(in.u32());
  c.num_layers = static_cast<int>(in.u32());
  c.hidden_units = static_cast<int>(in.u32());
  c.fourier_embeddings = static_cast<int>(in.u32());
  c.frequency_scale = in.f64();
  c.omega0 = in.f64();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptStream(std::string("bad INR config: ") + e.what());
  }
  return c;
}

void PriorModel::validate() const {
  config.validate();
  const std::size_t n = param_count(config);
  if (prior.size() != n) throw InvalidArgument("prior dimension does not match the config");
  if (per_weight_kl_bits.size() != n) throw InvalidArgument("per-weight KL length mismatch");
  if (!(c_beta_bits >= 0.0)) throw InvalidArgument("c_beta must be >= 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
}

Sha256Digest PriorModel::compute_hash() const { return sha256(serialize_body(*this)); }

std::vector<std::uint8_t> serialize_prior(const PriorModel& model) {
  model.validate();
  auto bytes = serialize_body(model);
  const auto digest = sha256(bytes);
  bytes.insert(bytes.end(), digest.begin(), digest.end());
  return bytes;
}

PriorModel deserialize_prior(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 32) throw CorruptStream("prior file too short");
  if (std::memcmp(bytes.data(), kPriorMagic, 4) != 0) throw CorruptStream("not a prior file");
  const auto body = bytes.first(bytes.size() - 32);
  Sha256Digest stored;
  std::copy(bytes.end() - 32, bytes.end(), stored.begin());
  if (sha256(body) != stored) throw CorruptStream("prior file digest mismatch");

  ByteReader in(body);
  in.raw(4);
  const std::uint16_t version = in.u16();
  if (version != kPriorFormatVersion) {
    throw CorruptStream("unsupported prior format version " + std::to_string(version));
  }
  PriorModel m;
  m.config = read_inr_config(in);
  m.fourier_seed = in.u64();
  m.beta = in.f64();
  m.c_beta_bits = in.f64();
  m.prior = read_gaussian(in, kMaxParams);
  m.per_weight_kl_bits = in.f64_array(kMaxParams);
  if (in.u8() != 0) {
    IndexHistogram h;
    for (auto& c : h.counts) c = in.u32();
    m.index_histogram = h;
  }
  if (in.remaining() != 0) throw CorruptStream("trailing bytes in prior file");
  m.content_hash = stored;
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptStream(e.what());
  }
  return m;
}

void save_prior(const PriorModel& model, const std::string& path) {
  write_file(path, serialize_prior(model));
}

PriorModel load_prior(const std::string& path) { return deserialize_prior(read_file(path)); }

void TrainingSchedule::validate() const {
  if (epochs < 1 || iters_per_epoch < 1 || first_epoch_iters < 1) {
    throw InvalidArgument("epochs and iteration counts must be positive");
  }
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(posterior_var_init > 0.0)) throw InvalidArgument("posterior_var_init must be positive");
  if (!(early_stop_tolerance >= 0.0)) throw InvalidArgument("early_stop_tolerance must be >= 0");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw InvalidArgument("batch_fraction must be in (0, 1]");
  }
}

double estimate_coding_cost(std::span<const DiagonalGaussian> posteriors,
                            const DiagonalGaussian& prior) {
  if (posteriors.empty()) throw InvalidArgument("no posteriors");
  double total = 0.0;
  for (const auto& q : posteriors) total += kl_divergence(q, prior);
  return nats_to_bits(total / static_cast<double>(posteriors.size()));
}

std::vector<double> per_weight_kl(std::span<const DiagonalGaussian> posteriors,
                                  const DiagonalGaussian& prior) {
  if (posteriors.empty()) throw InvalidArgument("no posteriors");
  std::vector<double> out(prior.size(), 0.0);
  for (const auto& q : posteriors) {
    const auto kl = kl_per_coordinate(q, prior);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += kl[i];
  }
  const double scale = 1.0 / (static_cast<double>(posteriors.size()) * std::numbers::ln2);
  for (double& v : out) v *= scale;
  return out;
}

double average_objective(const InrModel& model, std::span<const SignalBatch> dataset,
                         std::span<const VariationalParams> posteriors,
                         const DiagonalGaussian& prior, double beta, std::uint64_t noise_seed) {
  if (dataset.size() != posteriors.size() || dataset.empty()) {
    throw InvalidArgument("dataset/posterior count mismatch");
  }
  const auto partition = BlockPartition::single_block(model.num_params());
  const auto frozen = FrozenBlocks::none(1, model.num_params());
  const double lambdas[1] = {beta};
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Rng noise(noise_seed);
    const auto lg = model.loss_and_grads(posteriors[i], prior, model.embed(dataset[i].coords),
                                         dataset[i].targets, lambdas, partition, frozen, noise);
    total += lg.total;
  }
  return total / static_cast<double>(dataset.size());
}

PriorLearningResult learn_prior(std::span<const SignalBatch> dataset, const INRConfig& config,
                                double beta, const TrainingSchedule& schedule,
                                std::uint64_t seed) {
  if (dataset.empty()) throw InvalidArgument("learn_prior: empty dataset");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  schedule.validate();
  config.validate();
  for (const auto& d : dataset) d.validate(config);

  const std::uint64_t fourier_seed = derive_seed(seed, "fourier-seed");
  const InrModel model(config, fourier_seed);
  const std::size_t n = model.num_params();
  // Every datum shares the initial means and the noise seed, so identical
  // data yield identical posteriors.
  const std::uint64_t noise_seed = derive_seed(seed, "noise");
  Rng init_rng(derive_seed(seed, "init"));
  const std::vector<double> init_mean = model.initial_means(init_rng);

  DiagonalGaussian prior(std::vector<double>(n, 0.0), model.initial_variances());

  std::vector<DatumState> states;
  states.reserve(dataset.size());
  for (const auto& datum : dataset) {
    DatumState s{model.embed(datum.coords), &datum.targets,
                 VariationalParams{init_mean, std::vector<double>(n, std::log(schedule.posterior_var_init))},
                 Adam(n, schedule.learning_rate), Rng(noise_seed)};
    states.push_back(std::move(s));
  }

  PriorLearningResult result;
  auto objective = [&](const DiagonalGaussian& p) {
    double total = 0.0;
    const auto partition = BlockPartition::single_block(n);
    const auto frozen = FrozenBlocks::none(1, n);
    const double lambdas[1] = {beta};
    for (const auto& s : states) {
      Rng noise(noise_seed);
      total += model.loss_and_grads(s.posterior, p, s.embedded, *s.targets, lambdas, partition,
                                    frozen, noise).total;
    }
    return total / static_cast<double>(states.size());
  };

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const int iterations = epoch == 1 ? schedule.first_epoch_iters : schedule.iters_per_epoch;
    parallel_for(states.size(), schedule.jobs, [&](std::size_t i) {
      optimize_posterior(model, states[i], prior, beta, iterations, schedule.frozen_noise,
                         schedule.batch_fraction,
                         noise_seed, epoch);
    });
    result.objective_after_posteriors.push_back(objective(prior));

    std::vector<VariationalParams> params;
    for (const auto& s : states) params.push_back(s.posterior);
    prior = prior_update(distributions(params));
    const double after = objective(prior);
    if (!std::isfinite(after)) {
      throw DivergenceError("objective diverged in epoch " + std::to_string(epoch));
    }
    result.objective_after_prior.push_back(after);
    result.epochs_run = epoch;

    if (schedule.early_stop_tolerance > 0.0 && result.objective_after_prior.size() >= 2) {
      const double prev = result.objective_after_prior[result.objective_after_prior.size() - 2];
      if (prev - after < schedule.early_stop_tolerance * std::fabs(prev)) break;
    }
  }

  for (auto& s : states) result.posteriors.push_back(std::move(s.posterior));
  const auto final_posteriors = distributions(result.posteriors);

  PriorModel& m = result.model;
  m.config = config;
  m.fourier_seed = fourier_seed;
  m.prior = prior;
  m.beta = beta;
  m.c_beta_bits = estimate_coding_cost(final_posteriors, prior);
  m.per_weight_kl_bits = per_weight_kl(final_posteriors, prior);
  m.refresh_hash();
  return result;
}

}  // namespace vinr
