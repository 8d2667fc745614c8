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

#include "vinr/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include "vinr/errors.h"

namespace vinr {
namespace {

constexpr char kStreamMagic[4] = {'C', 'M', 'B', '1'};
constexpr int kMaxIndexWidth = 63;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_descriptor(ByteWriter& out, const SignalDescriptor& d) {
  out.u8(static_cast<std::uint8_t>(d.kind));
  out.u32(d.height);
  out.u32(d.width);
  out.u32(d.channels);
  out.u64(d.num_samples);
  out.u32(d.sample_rate);
}

SignalDescriptor read_descriptor(ByteReader& in) {
  SignalDescriptor d;
  const std::uint8_t kind = in.u8();
  if (kind > 1) throw CorruptStream("unknown signal kind");
  d.kind = static_cast<SignalKind>(kind);
  d.height = in.u32();
  d.width = in.u32();
  d.channels = in.u32();
  d.num_samples = in.u64();
  d.sample_rate = in.u32();
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptStream(std::string("bad signal descriptor: ") + e.what());
  }
  return d;
}

// Per-block widths: a base width, then one flag bit per block, followed by
// an explicit 6-bit width when the flag is set.
void write_widths(ByteWriter& out, const std::vector<std::uint8_t>& widths) {
  std::map<std::uint8_t, std::size_t> freq;
  for (auto w : widths) ++freq[w];
  std::uint8_t base = 0;
  std::size_t best = 0;
  for (const auto& [w, c] : freq) {
    if (c > best) {
      best = c;
      base = w;
    }
  }
  BitWriter bits;
  for (auto w : widths) {
    if (w == base) {
      bits.write(0, 1);
    } else {
      bits.write(1, 1);
      bits.write(w, 6);
    }
  }
  const BitString table = bits.finish();
  out.u32(static_cast<std::uint32_t>(widths.size()));
  out.u8(base);
  out.u32(static_cast<std::uint32_t>(table.bytes.size()));
  out.raw(table.bytes);
}

std::vector<std::uint8_t> read_widths(ByteReader& in) {
  const std::uint32_t count = in.u32();
  const std::uint8_t base = in.u8();
  const std::uint32_t table_bytes = in.u32();
  if (table_bytes > in.remaining()) throw CorruptStream("width table exceeds the stream");
  BitString table;
  const auto raw = in.raw(table_bytes);
  table.bytes.assign(raw.begin(), raw.end());
  table.bit_count = table.bytes.size() * 8;
  if (count > table.bit_count) throw CorruptStream("width table too short");
  BitReader reader(table);
  std::vector<std::uint8_t> widths(count);
  for (auto& w : widths) {
    w = reader.read(1) ? static_cast<std::uint8_t>(reader.read(6)) : base;
    if (w > kMaxIndexWidth) throw CorruptStream("index width out of range");
  }
  if (reader.remaining() >= 8) throw CorruptStream("trailing bytes in width table");
  return widths;
}

}  // namespace

void FineTuneSettings::validate() const {
  if (fit_iterations < 0 || inter_block_iterations < 0) {
    throw InvalidArgument("iteration counts must be >= 0");
  }
  if (adjust_period < 1) throw InvalidArgument("adjust_period must be positive");
  if (!(lambda_step > 1.0)) throw InvalidArgument("lambda_step must exceed 1");
  if (!(buffer_bits >= 0.0)) throw InvalidArgument("buffer_bits must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(posterior_var_init > 0.0)) throw InvalidArgument("posterior_var_init must be positive");
  if (lambda_init && !(*lambda_init > 0.0)) throw InvalidArgument("lambda_init must be positive");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw InvalidArgument("batch_fraction must be in (0, 1]");
  }
  if (!(lambda_floor >= 0.0)) throw InvalidArgument("lambda_floor must be >= 0");
}

std::vector<std::uint8_t> serialize_compressed(const CompressedObject& object) {
  const auto& h = object.header;
  ByteWriter out;
  out.raw({reinterpret_cast<const std::uint8_t*>(kStreamMagic), 4});
  out.u16(kCompressedFormatVersion);
  write_inr_config(out, h.config);
  out.raw(h.prior_hash);
  write_descriptor(out, h.signal);
  out.u64(h.rec_seed);
  out.f64(h.t_bits);
  out.f64(h.kappa_bits);
  out.u64(h.permutation_seed);
  out.u8(static_cast<std::uint8_t>(h.proposals));
  out.u32(h.sobol_version);
  out.u8(h.histogram_coded ? 1 : 0);
  write_widths(out, h.index_widths);
  out.u64(object.payload.bit_count);
  if (object.payload.bytes.size() != (object.payload.bit_count + 7) / 8) {
    throw InvalidArgument("payload byte count does not match its bit count");
  }
  out.raw(object.payload.bytes);
  out.u32(crc32(out.bytes()));
  return out.take();
}

CompressedObject deserialize_compressed(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 4) throw CorruptStream("compressed stream too short");
  if (std::memcmp(bytes.data(), kStreamMagic, 4) != 0) throw CorruptStream("not a compressed stream");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (crc32(body) != tail.u32()) throw CorruptStream("CRC mismatch");

  ByteReader in(body);
  in.raw(4);
  const std::uint16_t version = in.u16();
  if (version != kCompressedFormatVersion) {
    throw CorruptStream("unsupported stream version " + std::to_string(version));
  }
  CompressedObject obj;
  auto& h = obj.header;
  h.config = read_inr_config(in);
  const auto hash = in.raw(h.prior_hash.size());
  std::copy(hash.begin(), hash.end(), h.prior_hash.begin());
  h.signal = read_descriptor(in);
  h.rec_seed = in.u64();
  h.t_bits = in.f64();
  h.kappa_bits = in.f64();
  h.permutation_seed = in.u64();
  const std::uint8_t proposals = in.u8();
  if (proposals > 1) throw CorruptStream("unknown proposal kind");
  h.proposals = static_cast<ProposalKind>(proposals);
  h.sobol_version = in.u32();
  h.histogram_coded = in.u8() != 0;
  h.index_widths = read_widths(in);
  obj.payload.bit_count = in.u64();
  const std::uint64_t payload_bytes = (obj.payload.bit_count + 7) / 8;
  if (payload_bytes != in.remaining()) throw CorruptStream("payload length mismatch");
  const auto payload = in.raw(payload_bytes);
  obj.payload.bytes.assign(payload.begin(), payload.end());
  return obj;
}

void save_compressed(const CompressedObject& object, const std::string& path) {
  write_file(path, serialize_compressed(object));
}

CompressedObject load_compressed(const std::string& path) {
  return deserialize_compressed(read_file(path));
}

void adjust_lambdas(std::span<double> lambdas, std::span<const double> block_kl_bits,
                    double kappa_bits, double step, double buffer_bits,
                    const std::vector<bool>& frozen) {
  if (lambdas.size() != block_kl_bits.size()) throw InvalidArgument("lambda/KL length mismatch");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!frozen.empty() && frozen[k]) continue;
    if (block_kl_bits[k] > kappa_bits) {
      lambdas[k] *= step;
    } else if (block_kl_bits[k] < kappa_bits - buffer_bits) {
      lambdas[k] /= step;
    }
  }
}

PosteriorFitter::PosteriorFitter(const InrModel& model, const SignalBatch& datum,
                                 const DiagonalGaussian& prior, const BlockPartition& partition,
                                 const FineTuneSettings& settings, double beta,
                                 std::uint64_t noise_seed)
    : model_(model),
      embedded_(model.embed(datum.coords)),
      targets_(datum.targets),
      prior_(prior),
      partition_(partition),
      settings_(settings),
      lambda_init_(settings.lambda_init.value_or(beta)),
      lambdas_(partition.num_blocks(), lambda_init_),
      frozen_(FrozenBlocks::none(partition.num_blocks(), model.num_params())),
      active_(model.num_params(), true),
      adam_(model.num_params(), settings.learning_rate),
      noise_(noise_seed) {
  settings.validate();
  datum.validate(model.config());
  const std::size_t n = model.num_params();
  if (prior.size() != n) throw InvalidArgument("prior dimension does not match the model");
  partition.validate(n);
  posterior_.mean.assign(prior.mean().begin(), prior.mean().end());
  posterior_.log_variance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    posterior_.log_variance[i] = std::log(std::min(prior.variance()[i], settings.posterior_var_init));
  }
}

void PosteriorFitter::run(int iterations) {
  for (int i = 0; i < iterations; ++i) {
    LossAndGrads lg;
    try {
      if (settings_.batch_fraction < 1.0) {
        const auto rows = sample_rows(static_cast<std::size_t>(embedded_.rows()),
                                      settings_.batch_fraction, noise_);
        const double scale =
            static_cast<double>(rows.size()) / static_cast<double>(embedded_.rows());
        std::vector<double> scaled(lambdas_);
        for (double& l : scaled) l *= scale;
        lg = model_.loss_and_grads(posterior_, prior_, embedded_(rows, Eigen::all),
                                   targets_(rows, Eigen::all), scaled, partition_,
                                   frozen_, noise_);
      } else {
        lg = model_.loss_and_grads(posterior_, prior_, embedded_, targets_, lambdas_, partition_,
                                   frozen_, noise_);
      }
    } catch (const DivergenceError&) {
      throw DivergenceError("posterior fitting diverged at iteration " +
                            std::to_string(iteration_ + 1));
    }
    adam_.step(posterior_, lg.grad_mean, lg.grad_log_variance, active_);
    ++iteration_;
    if (iteration_ % settings_.adjust_period == 0) {
      adjust_lambdas(lambdas_, block_kl_bits(), partition_.kappa_bits, settings_.lambda_step,
                     settings_.buffer_bits, frozen_.frozen);
      const double floor = settings_.lambda_floor * lambda_init_;
      for (double& l : lambdas_) l = std::max(l, floor);
    }
  }
}

int PosteriorFitter::run_bounded(int iterations, double max_block_bits) {
  for (int i = 0; i < iterations; ++i) {
    const VariationalParams posterior = posterior_;
    const Adam adam = adam_;
    const std::vector<double> lambdas = lambdas_;
    run(1);
    const auto kl = block_kl_bits();
    for (std::size_t k = 0; k < kl.size(); ++k) {
      if (!frozen_.frozen[k] && kl[k] > max_block_bits) {
        posterior_ = posterior;
        adam_ = adam;
        lambdas_ = lambdas;
        --iteration_;
        return i;
      }
    }
  }
  return iterations;
}

void PosteriorFitter::freeze(std::size_t block, std::span<const double> values) {
  const auto& indices = partition_.blocks.at(block);
  if (values.size() != indices.size()) throw InvalidArgument("frozen block size mismatch");
  frozen_.frozen[block] = true;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    frozen_.values[indices[j]] = values[j];
    active_[indices[j]] = false;
  }
}

std::vector<double> PosteriorFitter::block_kl_bits() const {
  const auto kl = kl_per_coordinate(posterior_.distribution(), prior_);
  std::vector<double> out(partition_.num_blocks(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t i : partition_.blocks[k]) out[k] += kl[i];
    out[k] = nats_to_bits(out[k]);
  }
  return out;
}

BlockPartition stream_partition(const PriorModel& prior, double kappa_bits,
                                std::uint64_t permutation_seed) {
  return partition_weights(prior.per_weight_kl_bits, kappa_bits, permutation_seed);
}

CompressionResult compress(const SignalBatch& datum, const SignalDescriptor& descriptor,
                           const PriorModel& prior, const CompressionSettings& settings) {
  prior.validate();
  settings.fine_tune.validate();
  descriptor.validate();
  datum.validate(prior.config);
  if (datum.size() != descriptor.num_points() ||
      descriptor.input_dim() != prior.config.input_dim ||
      descriptor.output_dim() != prior.config.output_dim) {
    throw InvalidArgument("signal does not match the prior's INR configuration");
  }
  if (datum.coords != coordinate_grid(descriptor)) {
    throw InvalidArgument("signal coordinates are not the descriptor's grid");
  }
  const IndexHistogram* histogram = nullptr;
  if (settings.use_histogram) {
    if (!prior.index_histogram) throw InvalidArgument("prior carries no index histogram");
    histogram = &*prior.index_histogram;
  }

  RecSettings rec;
  rec.t_bits = settings.t_bits;
  rec.max_samples_cap = settings.max_samples_cap;
  rec.seed = derive_seed(settings.seed, "proposals");
  rec.proposals = settings.proposals;
  rec.validate();
  const std::uint64_t permutation_seed = derive_seed(settings.seed, "permutation");
  const std::uint64_t gumbel_seed = derive_seed(settings.seed, "gumbel");
  const std::uint64_t noise_seed = derive_seed(settings.seed, "noise");

  const BlockPartition partition = stream_partition(prior, settings.kappa_bits, permutation_seed);
  const InrModel model(prior.config, prior.fourier_seed);
  PosteriorFitter fitter(model, datum, prior.prior, partition, settings.fine_tune, prior.beta,
                         noise_seed);

  CompressionResult result;
  auto start = std::chrono::steady_clock::now();
  fitter.run(settings.fine_tune.fit_iterations);
  result.fit_seconds = seconds_since(start);
  result.fit_block_kl_bits = fitter.block_kl_bits();
  result.fit_lambdas = fitter.lambdas();

  // Largest KL a block can carry and still fit under the cap, with a little slack
  // for rounding in the proposal count.
  const double max_block_bits =
      std::log2(static_cast<double>(settings.max_samples_cap)) - settings.t_bits - 1e-6;
  start = std::chrono::steady_clock::now();
  const std::size_t num_blocks = partition.num_blocks();
  for (std::size_t k = 0; k < num_blocks; ++k) {
    const auto& indices = partition.blocks[k];
    const DiagonalGaussian q = fitter.posterior().distribution().slice(indices);
    const DiagonalGaussian p = prior.prior.slice(indices);
    const auto block_id = static_cast<std::uint32_t>(k);
    std::vector<double> values;
    if (settings.mode == EncodeMode::kAStar) {
      AStarResult coded;
      try {
        coded = astar_encode(q, p, rec, derive_seed(gumbel_seed, "block", k), block_id);
      } catch (const SampleCapExceeded& e) {
        throw SampleCapExceeded("block " + std::to_string(k) + ": " + e.what());
      }
      result.blocks.push_back(coded.encoded);
      result.block_kl_bits.push_back(coded.kl_bits);
      values = std::move(coded.sample);
    } else {
      Rng exact(derive_seed(gumbel_seed, "exact", k));
      values = sample(q, exact);
      result.blocks.push_back(EncodedBlock{1, 1, block_id});
      result.block_kl_bits.push_back(nats_to_bits(kl_divergence(q, p)));
    }
    fitter.freeze(k, values);
    if (k + 1 == num_blocks) continue;
    const int iterations = settings.fine_tune.inter_block_iterations;
    if (settings.guard_sample_cap && settings.mode == EncodeMode::kAStar) {
      if (fitter.run_bounded(iterations, max_block_bits) < iterations) ++result.guarded_stops;
    } else {
      fitter.run(iterations);
    }
  }
  result.rec_seconds = seconds_since(start);

  auto& h = result.object.header;
  h.config = prior.config;
  h.prior_hash = prior.content_hash;
  h.signal = descriptor;
  h.rec_seed = rec.seed;
  h.t_bits = settings.t_bits;
  h.kappa_bits = settings.kappa_bits;
  h.permutation_seed = permutation_seed;
  h.proposals = settings.proposals;
  h.histogram_coded = histogram != nullptr;
  for (const auto& b : result.blocks) {
    h.index_widths.push_back(static_cast<std::uint8_t>(index_width(b.n_samples)));
  }
  result.object.payload = code_indices(result.blocks, histogram);

  result.weights = fitter.frozen().values;
  result.reconstruction = model.forward(result.weights, coordinate_grid(descriptor));
  return result;
}

Eigen::MatrixXd decompress(const CompressedObject& object, const PriorModel& prior) {
  const auto& h = object.header;
  if (h.prior_hash != prior.content_hash) throw WrongPrior("stream was encoded with another prior");
  if (!(h.config == prior.config)) throw WrongPrior("stream INR configuration differs from the prior");
  if (h.proposals == ProposalKind::kSobol && h.sobol_version != kSobolTableVersion) {
    throw CorruptStream("unknown proposal table version");
  }
  if (h.signal.input_dim() != h.config.input_dim || h.signal.output_dim() != h.config.output_dim) {
    throw CorruptStream("signal shape does not match the INR configuration");
  }
  const IndexHistogram* histogram = nullptr;
  if (h.histogram_coded) {
    if (!prior.index_histogram) throw WrongPrior("stream needs the prior's index histogram");
    histogram = &*prior.index_histogram;
  }

  BlockPartition partition;
  try {
    partition = stream_partition(prior, h.kappa_bits, h.permutation_seed);
  } catch (const InvalidArgument& e) {
    throw CorruptStream(std::string("cannot rebuild partition: ") + e.what());
  }
  if (partition.num_blocks() != h.num_blocks()) throw CorruptStream("block count mismatch");

  std::vector<std::uint64_t> n_samples;
  n_samples.reserve(h.num_blocks());
  for (auto w : h.index_widths) n_samples.push_back(std::uint64_t{1} << w);
  const auto indices = decode_indices(object.payload, n_samples, histogram);

  RecSettings rec;
  rec.t_bits = h.t_bits;
  rec.seed = h.rec_seed;
  rec.proposals = h.proposals;
  std::vector<double> weights(prior.prior.size(), 0.0);
  for (std::size_t k = 0; k < partition.num_blocks(); ++k) {
    const auto& block = partition.blocks[k];
    const EncodedBlock encoded{indices[k], n_samples[k], static_cast<std::uint32_t>(k)};
    const auto values = astar_decode(prior.prior.slice(block), encoded, rec);
    for (std::size_t j = 0; j < block.size(); ++j) weights[block[j]] = values[j];
  }
  const InrModel model(prior.config, prior.fourier_seed);
  return model.forward(weights, coordinate_grid(h.signal));
}

double psnr(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

Metrics measure(const CompressedObject& object, const Eigen::MatrixXd& reconstruction,
                const Eigen::MatrixXd& original) {
  if (reconstruction.rows() != original.rows() || reconstruction.cols() != original.cols()) {
    throw InvalidArgument("reconstruction shape does not match the original");
  }
  if (original.size() == 0) throw InvalidArgument("empty signal");
  Metrics m;
  m.bits_total = static_cast<double>(serialize_compressed(object).size() * 8);
  m.bits_per_unit = m.bits_total / object.header.signal.extent();
  m.mse = (reconstruction.cwiseMax(0.0).cwiseMin(1.0) - original).squaredNorm() /
          static_cast<double>(original.size());
  m.psnr_db = psnr(m.mse);
  return m;
}

IndexHistogram build_index_histogram(std::span<const EncodedBlock> blocks) {
  IndexHistogram h;
  for (const auto& b : blocks) h.add(b.index);
  return h;
}

}  // namespace vinr
