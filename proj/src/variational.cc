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

#include "vinr/variational.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vinr/errors.h"

namespace vinr {
namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

DiagonalGaussian::DiagonalGaussian(std::vector<double> mean, std::vector<double> variance)
    : mean_(std::move(mean)), variance_(std::move(variance)) {
  check_same_size(mean_.size(), variance_.size(), "DiagonalGaussian");
  for (std::size_t i = 0; i < variance_.size(); ++i) {
    if (!(variance_[i] > 0.0) || !std::isfinite(variance_[i]) || !std::isfinite(mean_[i])) {
      throw InvalidArgument("DiagonalGaussian: invalid parameters at coordinate " +
                            std::to_string(i));
    }
  }
}

DiagonalGaussian DiagonalGaussian::slice(std::span<const std::size_t> indices) const {
  std::vector<double> m(indices.size()), v(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw InvalidArgument("DiagonalGaussian::slice: index out of range");
    m[k] = mean_[indices[k]];
    v[k] = variance_[indices[k]];
  }
  DiagonalGaussian out;
  out.mean_ = std::move(m);
  out.variance_ = std::move(v);
  return out;
}

std::vector<double> kl_per_coordinate(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  check_same_size(q.size(), p.size(), "kl_divergence");
  std::vector<double> out(q.size());
  const auto mq = q.mean(), vq = q.variance(), mp = p.mean(), vp = p.variance();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double diff = mq[i] - mp[i];
    const double ratio = vq[i] / vp[i];
    // ratio - 1 - log(ratio) loses precision near 1; log1p keeps it exact
    // enough for the q == p case to return 0.
    const double term = (ratio - 1.0) - std::log1p(ratio - 1.0);
    out[i] = 0.5 * (term + diff * diff / vp[i]);
  }
  return out;
}

double kl_divergence(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  double total = 0.0;
  for (double v : kl_per_coordinate(q, p)) total += v;
  return total;
}

double log_density(const DiagonalGaussian& g, std::span<const double> w) {
  check_same_size(g.size(), w.size(), "log_density");
  const auto m = g.mean(), v = g.variance();
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w[i] - m[i];
    total += -0.5 * (std::log(2.0 * std::numbers::pi * v[i]) + diff * diff / v[i]);
  }
  return total;
}

std::vector<double> sample(const DiagonalGaussian& g, Rng& rng) {
  std::vector<double> out(g.size());
  const auto m = g.mean(), v = g.variance();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = m[i] + std::sqrt(std::max(v[i], kMinVariance)) * rng.normal();
  }
  return out;
}

DiagonalGaussian prior_update(std::span<const DiagonalGaussian> posteriors) {
  if (posteriors.empty()) throw InvalidArgument("prior_update: no posteriors");
  const std::size_t d = posteriors.front().size();
  for (const auto& q : posteriors) check_same_size(q.size(), d, "prior_update");
  const double inv_m = 1.0 / static_cast<double>(posteriors.size());

  std::vector<double> mean(d, 0.0), variance(d, 0.0);
  for (const auto& q : posteriors) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += q.mean()[i];
  }
  for (double& m : mean) m *= inv_m;
  for (const auto& q : posteriors) {
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = q.mean()[i] - mean[i];
      variance[i] += q.variance()[i] + diff * diff;
    }
  }
  for (double& v : variance) v = std::max(v * inv_m, kMinVariance);
  return DiagonalGaussian(std::move(mean), std::move(variance));
}

void write_gaussian(ByteWriter& out, const DiagonalGaussian& g) {
  out.f64_array(g.mean());
  out.f64_array(g.variance());
}

DiagonalGaussian read_gaussian(ByteReader& in, std::size_t max_dim) {
  auto mean = in.f64_array(max_dim);
  auto variance = in.f64_array(max_dim);
  try {
    return DiagonalGaussian(std::move(mean), std::move(variance));
  } catch (const InvalidArgument& e) {
    throw CorruptStream(e.what());
  }
}

}  // namespace vinr
