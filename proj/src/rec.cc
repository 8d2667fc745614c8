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

#include "vinr/rec.h"

#include <bit>
#include <string>

#include "vinr/errors.h"
#include "vinr/inverse_normal.h"

namespace vinr {
namespace {

constexpr std::uint32_t kMaxTotalFrequency = 1u << 16;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Standard normal coordinate d of pseudo-random proposal `index`, computed
// from a hash so that any proposal can be regenerated on its own.
double counter_normal(std::uint64_t seed, std::uint64_t index, std::size_t d) {
  const std::uint64_t h =
      mix64(mix64(seed ^ mix64(index)) + (d + 1) * 0x9E3779B97F4A7C15ull);
  return inverse_normal_cdf((static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53);
}

int bucket_of(std::uint64_t index) { return std::bit_width(index - 1); }

// Add-one smoothed frequencies of buckets 0..max_bucket, scaled so that
// their sum stays within kMaxTotalFrequency.
std::vector<std::uint32_t> bucket_frequencies(const IndexHistogram& h, int max_bucket) {
  std::vector<std::uint64_t> raw(static_cast<std::size_t>(max_bucket) + 1);
  std::uint64_t total = 0;
  for (int b = 0; b <= max_bucket; ++b) {
    raw[b] = static_cast<std::uint64_t>(h.counts[b]) + 1;
    total += raw[b];
  }
  std::vector<std::uint32_t> freq(raw.size());
  const std::uint64_t budget = kMaxTotalFrequency - raw.size();
  for (std::size_t b = 0; b < raw.size(); ++b) {
    freq[b] = total <= kMaxTotalFrequency
                  ? static_cast<std::uint32_t>(raw[b])
                  : static_cast<std::uint32_t>(1 + raw[b] * budget / total);
  }
  return freq;
}

}  // namespace

void RecSettings::validate() const {
  if (!(t_bits >= 0.0) || !std::isfinite(t_bits)) throw InvalidArgument("t must be >= 0");
  if (max_samples_cap < 1 || max_samples_cap > (std::uint64_t{1} << 32) - 1) {
    throw InvalidArgument("max_samples_cap must lie in [1, 2^32)");
  }
}

void IndexHistogram::add(std::uint64_t index) {
  const int b = bucket_of(index);
  if (index < 1 || b >= kBuckets) throw InvalidArgument("index outside histogram range");
  ++counts[b];
}

double truncated_gumbel(double bound, Rng& rng) {
  // Inverse CDF: x = -log(exp(-b) + E) with E = -log U ~ Exp(1). For b <= 0
  // the equivalent b - log1p(exp(b) E) avoids overflowing exp(-b).
  const double e = -std::log(rng.uniform());
  if (bound == std::numeric_limits<double>::infinity()) return -std::log(e);
  if (bound > 0.0) return -std::log(std::exp(-bound) + e);
  return bound - std::log1p(std::exp(bound) * e);
}

std::uint64_t sample_count(double kl_bits, const RecSettings& settings) {
  settings.validate();
  if (!(kl_bits >= 0.0) || !std::isfinite(kl_bits)) throw InvalidArgument("KL must be >= 0");
  const double exponent = kl_bits + settings.t_bits;
  const double n = std::floor(std::exp2(exponent));
  if (n > static_cast<double>(settings.max_samples_cap)) {
    throw SampleCapExceeded("block needs 2^" + std::to_string(exponent) +
                            " proposals, above the cap of " +
                            std::to_string(settings.max_samples_cap));
  }
  return n < 1.0 ? 1 : static_cast<std::uint64_t>(n);
}

int index_width(std::uint64_t n) { return n <= 1 ? 0 : std::bit_width(n - 1); }

ProposalSampler::ProposalSampler(const DiagonalGaussian& prior_block, std::uint64_t seed,
                                 ProposalKind kind)
    : mean_(prior_block.mean().begin(), prior_block.mean().end()),
      stddev_(prior_block.size()),
      seed_(seed) {
  if (kind == ProposalKind::kSobol) {
    sobol_.emplace(SobolSequence::seeded(prior_block.size(), seed));
  } else if (kind != ProposalKind::kPseudoRandom) {
    throw InvalidArgument("unknown proposal kind");
  }
  for (std::size_t i = 0; i < stddev_.size(); ++i) {
    stddev_[i] = std::sqrt(prior_block.variance()[i]);
  }
}

void ProposalSampler::standard_normals(std::uint64_t index, std::span<double> z) const {
  if (index < 1) throw InvalidArgument("proposal indices start at 1");
  if (!sobol_) {
    for (std::size_t d = 0; d < dimension(); ++d) z[d] = counter_normal(seed_, index, d);
    return;
  }
  std::vector<std::uint32_t> x(dimension());
  sobol_->point(index, x);
  for (std::size_t d = 0; d < x.size(); ++d) z[d] = inverse_normal_cdf(sobol_to_unit(x[d]));
}

std::vector<double> ProposalSampler::to_weights(std::span<const double> z) const {
  std::vector<double> w(dimension());
  for (std::size_t d = 0; d < w.size(); ++d) w[d] = mean_[d] + stddev_[d] * z[d];
  return w;
}

std::vector<double> ProposalSampler::sample(std::uint64_t index) const {
  std::vector<double> z(dimension());
  standard_normals(index, z);
  return to_weights(z);
}

ProposalSampler::Stream::Stream(const ProposalSampler& s) : sampler_(&s), z_(s.dimension()) {
  if (s.sobol_) cursor_.emplace(*s.sobol_);
}

std::span<const double> ProposalSampler::Stream::next() {
  ++index_;
  if (!cursor_) {
    sampler_->standard_normals(index_, z_);
    return z_;
  }
  const auto x = cursor_->next();
  for (std::size_t d = 0; d < x.size(); ++d) z_[d] = inverse_normal_cdf(sobol_to_unit(x[d]));
  return z_;
}

std::uint64_t block_proposal_seed(const RecSettings& settings, std::uint32_t block_id) {
  return derive_seed(settings.seed, "proposal", block_id);
}

std::vector<std::vector<double>> proposal_samples(const DiagonalGaussian& prior_block,
                                                  std::uint64_t n, std::uint64_t seed,
                                                  ProposalKind kind) {
  if (n < 1) throw InvalidArgument("need at least one proposal");
  ProposalSampler sampler(prior_block, seed, kind);
  ProposalSampler::Stream stream(sampler);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(sampler.to_weights(stream.next()));
  return out;
}

AStarResult astar_encode(const DiagonalGaussian& target, const DiagonalGaussian& prior,
                         const RecSettings& settings, std::uint64_t gumbel_seed,
                         std::uint32_t block_id) {
  if (target.size() != prior.size()) throw InvalidArgument("astar_encode: dimension mismatch");
  AStarResult result;
  result.kl_bits = nats_to_bits(kl_divergence(target, prior));
  const std::uint64_t n = sample_count(result.kl_bits, settings);

  // With w = mu_p + s_p z the log ratio is
  //   -1/2 sum log(v_q / v_p) + sum [z^2 / 2 - (w - mu_q)^2 / (2 v_q)].
  const std::size_t d = target.size();
  const auto mq = target.mean(), vq = target.variance();
  const auto mp = prior.mean(), vp = prior.variance();
  std::vector<double> sp(d), offset(d), inv_2vq(d);
  double constant = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    sp[j] = std::sqrt(vp[j]);
    offset[j] = mp[j] - mq[j];
    inv_2vq[j] = 0.5 / vq[j];
    constant -= 0.5 * std::log(vq[j] / vp[j]);
  }

  ProposalSampler sampler(prior, block_proposal_seed(settings, block_id), settings.proposals);
  ProposalSampler::Stream stream(sampler);
  Rng gumbel(gumbel_seed);
  auto log_ratio = [&](std::uint64_t i) {
    const auto z = stream.next();
    double r = constant;
    for (std::size_t j = 0; j < d; ++j) {
      const double dw = offset[j] + sp[j] * z[j];
      r += 0.5 * z[j] * z[j] - dw * dw * inv_2vq[j];
    }
    if (!std::isfinite(r)) {
      throw Error("non-finite importance weight at proposal " + std::to_string(i));
    }
    return r;
  };
  const std::uint64_t index = astar_search(n, log_ratio, gumbel);

  result.encoded = EncodedBlock{index, n, block_id};
  result.sample = sampler.sample(index);
  return result;
}

std::vector<double> astar_decode(const DiagonalGaussian& prior_block, const EncodedBlock& encoded,
                                 const RecSettings& settings) {
  if (encoded.index < 1 || encoded.index > encoded.n_samples) {
    throw CorruptStream("A* index " + std::to_string(encoded.index) + " outside [1, " +
                        std::to_string(encoded.n_samples) + "] in block " +
                        std::to_string(encoded.block_id));
  }
  ProposalSampler sampler(prior_block, block_proposal_seed(settings, encoded.block_id),
                          settings.proposals);
  return sampler.sample(encoded.index);
}

BitString code_indices(std::span<const EncodedBlock> blocks, const IndexHistogram* histogram) {
  for (const auto& b : blocks) {
    if (b.index < 1 || b.index > b.n_samples) throw InvalidArgument("index outside [1, N]");
  }
  if (histogram == nullptr) {
    BitWriter writer;
    for (const auto& b : blocks) writer.write(b.index - 1, index_width(b.n_samples));
    return writer.finish();
  }
  RangeEncoder encoder;
  for (const auto& b : blocks) {
    const int max_bucket = index_width(b.n_samples);
    if (max_bucket >= IndexHistogram::kBuckets) throw InvalidArgument("N too large for histogram");
    const auto freq = bucket_frequencies(*histogram, max_bucket);
    std::uint32_t total = 0;
    for (auto f : freq) total += f;
    const int bucket = bucket_of(b.index);
    std::uint32_t cum = 0;
    for (int k = 0; k < bucket; ++k) cum += freq[k];
    encoder.encode(cum, freq[bucket], total);
    if (bucket >= 2) {
      const std::uint64_t low_bits = (b.index - 1) & ((std::uint64_t{1} << (bucket - 1)) - 1);
      encoder.encode_bits(static_cast<std::uint32_t>(low_bits), bucket - 1);
    }
  }
  BitString out;
  out.bytes = encoder.finish();
  out.bit_count = out.bytes.size() * 8;
  return out;
}

std::vector<std::uint64_t> decode_indices(const BitString& bits,
                                          std::span<const std::uint64_t> n_samples,
                                          const IndexHistogram* histogram) {
  std::vector<std::uint64_t> out;
  out.reserve(n_samples.size());
  if (histogram == nullptr) {
    BitReader reader(bits);
    for (std::uint64_t n : n_samples) {
      const std::uint64_t index = reader.read(index_width(n)) + 1;
      if (index > n) throw CorruptStream("decoded index exceeds its block's sample count");
      out.push_back(index);
    }
    if (reader.remaining() != 0) throw CorruptStream("trailing bits after the last index");
    return out;
  }
  if (bits.bit_count != bits.bytes.size() * 8) throw CorruptStream("range payload not byte sized");
  if (n_samples.empty()) return out;
  RangeDecoder decoder(bits.bytes);
  for (std::uint64_t n : n_samples) {
    const int max_bucket = index_width(n);
    if (max_bucket >= IndexHistogram::kBuckets) throw CorruptStream("N too large for histogram");
    const auto freq = bucket_frequencies(*histogram, max_bucket);
    std::uint32_t total = 0;
    for (auto f : freq) total += f;
    const std::uint32_t slot = decoder.peek(total);
    int bucket = 0;
    std::uint32_t cum = 0;
    while (cum + freq[bucket] <= slot) cum += freq[bucket++];
    decoder.consume(cum, freq[bucket]);
    std::uint64_t index = 1;
    if (bucket == 1) {
      index = 2;
    } else if (bucket >= 2) {
      const std::uint64_t low = decoder.decode_bits(bucket - 1);
      index = ((std::uint64_t{1} << (bucket - 1)) | low) + 1;
    }
    if (index > n) throw CorruptStream("decoded index exceeds its block's sample count");
    out.push_back(index);
  }
  return out;
}

}  // namespace vinr
