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

#include "vinr/inr_model.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "vinr/errors.h"

namespace vinr {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

double first_layer_bound(std::size_t fan_in) { return 1.0 / static_cast<double>(fan_in); }

double hidden_layer_bound(std::size_t fan_in, double omega0) {
  return std::sqrt(6.0 / static_cast<double>(fan_in)) / omega0;
}

double bias_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

void INRConfig::validate() const {
  if (input_dim < 1) throw InvalidArgument("input_dim must be >= 1");
  if (output_dim < 1) throw InvalidArgument("output_dim must be >= 1");
  if (num_layers < 2) throw InvalidArgument("num_layers must be >= 2");
  if (hidden_units < 1) throw InvalidArgument("hidden_units must be >= 1");
  if (fourier_embeddings < 2 || fourier_embeddings % 2 != 0) {
    throw InvalidArgument("fourier_embeddings must be even and >= 2");
  }
  if (!(frequency_scale > 0.0)) throw InvalidArgument("frequency_scale must be positive");
  if (!(omega0 > 0.0)) throw InvalidArgument("omega0 must be positive");
}

std::vector<LayerLayout> layer_layout(const INRConfig& config) {
  config.validate();
  std::vector<LayerLayout> layers;
  std::size_t offset = 0;
  std::size_t fan_in = static_cast<std::size_t>(config.fourier_embeddings);
  for (int l = 0; l < config.num_layers; ++l) {
    const bool last = l == config.num_layers - 1;
    const std::size_t fan_out =
        static_cast<std::size_t>(last ? config.output_dim : config.hidden_units);
    LayerLayout layer{fan_in, fan_out, offset, offset + fan_in * fan_out, !last};
    offset = layer.bias_offset + fan_out;
    layers.push_back(layer);
    fan_in = fan_out;
  }
  return layers;
}

std::size_t param_count(const INRConfig& config) {
  const auto layers = layer_layout(config);
  return layers.back().bias_offset + layers.back().fan_out;
}

void SignalBatch::validate(const INRConfig& config) const {
  if (coords.rows() != targets.rows()) throw InvalidArgument("coords/targets row mismatch");
  if (coords.cols() != config.input_dim) throw InvalidArgument("coordinate dimension mismatch");
  if (targets.cols() != config.output_dim) throw InvalidArgument("target dimension mismatch");
  if (!coords.allFinite() || !targets.allFinite()) throw InvalidArgument("non-finite signal");
}

DiagonalGaussian VariationalParams::distribution() const {
  std::vector<double> var(log_variance.size());
  for (std::size_t i = 0; i < var.size(); ++i) {
    var[i] = std::max(std::exp(log_variance[i]), kMinVariance);
  }
  return DiagonalGaussian(mean, std::move(var));
}

VariationalParams VariationalParams::from(const DiagonalGaussian& g) {
  VariationalParams p;
  p.mean.assign(g.mean().begin(), g.mean().end());
  p.log_variance.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) p.log_variance[i] = std::log(g.variance()[i]);
  return p;
}

InrModel::InrModel(INRConfig config, std::uint64_t fourier_seed)
    : config_(config), num_params_(param_count(config)), layers_(layer_layout(config)) {
  Rng rng(derive_seed(fourier_seed, "fourier"));
  frequencies_.resize(config_.fourier_embeddings / 2, config_.input_dim);
  for (Eigen::Index r = 0; r < frequencies_.rows(); ++r) {
    for (Eigen::Index c = 0; c < frequencies_.cols(); ++c) {
      frequencies_(r, c) = config_.frequency_scale * rng.normal();
    }
  }
}

Eigen::MatrixXd InrModel::embed(const Eigen::MatrixXd& coords) const {
  if (coords.cols() != config_.input_dim) throw InvalidArgument("coordinate dimension mismatch");
  const Eigen::MatrixXd phase = (2.0 * std::numbers::pi) * coords * frequencies_.transpose();
  const Eigen::Index half = frequencies_.rows();
  Eigen::MatrixXd out(coords.rows(), 2 * half);
  out.leftCols(half) = phase.array().sin().matrix();
  out.rightCols(half) = phase.array().cos().matrix();
  return out;
}

Eigen::MatrixXd InrModel::moment_pass(std::span<const double> mean, std::span<const double> var,
                                      const Eigen::MatrixXd& embedded, Rng* noise,
                                      const Eigen::MatrixXd* targets, double* sse,
                                      std::vector<double>* grad_mean,
                                      std::vector<double>* grad_var) const {
  if (mean.size() != num_params_) {
    throw InvalidArgument("weight vector has " + std::to_string(mean.size()) +
                          " entries, model expects " + std::to_string(num_params_));
  }
  if (embedded.cols() != config_.fourier_embeddings) {
    throw InvalidArgument("embedding width mismatch");
  }
  const bool stochastic = noise != nullptr;
  if (stochastic && var.size() != num_params_) throw InvalidArgument("variance length mismatch");
  const bool backward = targets != nullptr;
  const Eigen::Index n = embedded.rows();
  const std::size_t num_layers = layers_.size();

  std::vector<Eigen::MatrixXd> inputs(backward ? num_layers : 0);
  // omega0 * cos(omega0 * a) of every sine layer, kept for the backward pass.
  std::vector<Eigen::MatrixXd> slopes(backward ? num_layers : 0);
  std::vector<Eigen::MatrixXd> sds(backward && stochastic ? num_layers : 0);
  std::vector<Eigen::MatrixXd> eps(backward && stochastic ? num_layers : 0);

  Eigen::MatrixXd h = embedded;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto& layer = layers_[l];
    const auto out_dim = static_cast<Eigen::Index>(layer.fan_out);
    const auto in_dim = static_cast<Eigen::Index>(layer.fan_in);
    ConstRowMap w(mean.data() + layer.weight_offset, out_dim, in_dim);
    ConstVecMap b(mean.data() + layer.bias_offset, out_dim);
    Eigen::MatrixXd a = h * w.transpose();
    a.rowwise() += b.transpose();
    if (stochastic) {
      ConstRowMap wv(var.data() + layer.weight_offset, out_dim, in_dim);
      ConstVecMap bv(var.data() + layer.bias_offset, out_dim);
      Eigen::MatrixXd s = h.array().square().matrix() * wv.transpose();
      s.rowwise() += bv.transpose();
      Eigen::MatrixXd sd = s.array().max(0.0).sqrt().matrix();
      Eigen::MatrixXd e(n, out_dim);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < out_dim; ++c) e(r, c) = noise->normal();
      }
      a.array() += sd.array() * e.array();
      if (backward) {
        sds[l] = std::move(sd);
        eps[l] = std::move(e);
      }
    }
    if (backward) inputs[l] = h;
    if (layer.sine) {
      const double w0 = config_.omega0;
      if (backward) {
        Eigen::MatrixXd slope(n, out_dim);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          const double z = w0 * a.data()[i];
          a.data()[i] = std::sin(z);
          slope.data()[i] = w0 * std::cos(z);
        }
        slopes[l] = std::move(slope);
        h = std::move(a);
      } else {
        h = (w0 * a.array()).sin().matrix();
      }
    } else {
      h = std::move(a);
    }
  }
  if (!backward) return h;

  const Eigen::MatrixXd diff = h - *targets;
  *sse = diff.squaredNorm();
  grad_mean->assign(num_params_, 0.0);
  if (stochastic) grad_var->assign(num_params_, 0.0);

  Eigen::MatrixXd g = 2.0 * diff;
  for (std::size_t l = num_layers; l-- > 0;) {
    const auto& layer = layers_[l];
    const auto out_dim = static_cast<Eigen::Index>(layer.fan_out);
    const auto in_dim = static_cast<Eigen::Index>(layer.fan_in);
    if (layer.sine) {
      g.array() *= slopes[l].array();
    }
    const Eigen::MatrixXd& x = inputs[l];
    RowMap(grad_mean->data() + layer.weight_offset, out_dim, in_dim) = g.transpose() * x;
    VecMap(grad_mean->data() + layer.bias_offset, out_dim) = g.colwise().sum().transpose();

    Eigen::MatrixXd ds;
    if (stochastic) {
      ds = Eigen::MatrixXd::Zero(n, out_dim);
      const auto& sd = sds[l];
      for (Eigen::Index c = 0; c < out_dim; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
          if (sd(r, c) > 0.0) ds(r, c) = g(r, c) * eps[l](r, c) / (2.0 * sd(r, c));
        }
      }
      RowMap(grad_var->data() + layer.weight_offset, out_dim, in_dim) =
          ds.transpose() * x.array().square().matrix();
      VecMap(grad_var->data() + layer.bias_offset, out_dim) = ds.colwise().sum().transpose();
    }
    if (l == 0) break;
    ConstRowMap w(mean.data() + layer.weight_offset, out_dim, in_dim);
    Eigen::MatrixXd dx = g * w;
    if (stochastic) {
      ConstRowMap wv(var.data() + layer.weight_offset, out_dim, in_dim);
      dx.array() += 2.0 * x.array() * (ds * wv).array();
    }
    g = std::move(dx);
  }
  return h;
}

Eigen::MatrixXd InrModel::forward_embedded(std::span<const double> weights,
                                           const Eigen::MatrixXd& embedded) const {
  return moment_pass(weights, {}, embedded, nullptr, nullptr, nullptr, nullptr, nullptr);
}

Eigen::MatrixXd InrModel::forward(std::span<const double> weights,
                                  const Eigen::MatrixXd& coords) const {
  if (weights.size() != num_params_) {
    throw InvalidArgument("weight vector has " + std::to_string(weights.size()) +
                          " entries, model expects " + std::to_string(num_params_));
  }
  return forward_embedded(weights, embed(coords));
}

Eigen::MatrixXd InrModel::forward_local_reparam(const DiagonalGaussian& posterior,
                                                const Eigen::MatrixXd& coords, Rng& noise) const {
  if (posterior.size() != num_params_) throw InvalidArgument("posterior dimension mismatch");
  return moment_pass(posterior.mean(), posterior.variance(), embed(coords), &noise, nullptr,
                     nullptr, nullptr, nullptr);
}

double InrModel::distortion_and_grad(std::span<const double> weights,
                                     const Eigen::MatrixXd& embedded,
                                     const Eigen::MatrixXd& targets,
                                     std::vector<double>* grad) const {
  double sse = 0.0;
  std::vector<double> scratch;
  moment_pass(weights, {}, embedded, nullptr, &targets, &sse, grad ? grad : &scratch, nullptr);
  return sse;
}

std::vector<double> InrModel::initial_means(Rng& rng) const {
  std::vector<double> w(num_params_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const double bound =
        l == 0 ? first_layer_bound(layer.fan_in) : hidden_layer_bound(layer.fan_in, config_.omega0);
    for (std::size_t i = 0; i < layer.fan_in * layer.fan_out; ++i) {
      w[layer.weight_offset + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    const double bb = bias_bound(layer.fan_in);
    for (std::size_t i = 0; i < layer.fan_out; ++i) {
      w[layer.bias_offset + i] = bb * (2.0 * rng.uniform() - 1.0);
    }
  }
  return w;
}

std::vector<double> InrModel::initial_variances() const {
  std::vector<double> v(num_params_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const double bound =
        l == 0 ? first_layer_bound(layer.fan_in) : hidden_layer_bound(layer.fan_in, config_.omega0);
    const double bb = bias_bound(layer.fan_in);
    std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset),
                layer.fan_in * layer.fan_out, bound * bound / 3.0);
    std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset), layer.fan_out,
                bb * bb / 3.0);
  }
  return v;
}

LossAndGrads InrModel::loss_and_grads(const VariationalParams& posterior,
                                      const DiagonalGaussian& prior,
                                      const Eigen::MatrixXd& embedded,
                                      const Eigen::MatrixXd& targets,
                                      std::span<const double> lambdas,
                                      const BlockPartition& partition, const FrozenBlocks& frozen,
                                      Rng& noise) const {
  const std::size_t n = num_params_;
  if (posterior.mean.size() != n || posterior.log_variance.size() != n || prior.size() != n) {
    throw InvalidArgument("posterior/prior dimension does not match the model");
  }
  partition.validate(n);
  const std::size_t k_blocks = partition.num_blocks();
  if (lambdas.size() != k_blocks || frozen.frozen.size() != k_blocks) {
    throw InvalidArgument("lambda/frozen vectors must have one entry per block");
  }
  if (frozen.values.size() != n) throw InvalidArgument("frozen value vector length mismatch");
  if (targets.rows() != embedded.rows() || targets.cols() != config_.output_dim) {
    throw InvalidArgument("target shape mismatch");
  }

  std::vector<double> mean(n), var(n);
  std::vector<bool> floored(n, false);
  for (std::size_t k = 0; k < k_blocks; ++k) {
    for (std::size_t i : partition.blocks[k]) {
      if (frozen.frozen[k]) {
        mean[i] = frozen.values[i];
        var[i] = 0.0;
      } else {
        mean[i] = posterior.mean[i];
        const double v = std::exp(posterior.log_variance[i]);
        floored[i] = !(v >= kMinVariance);
        var[i] = floored[i] ? kMinVariance : v;
      }
    }
  }

  LossAndGrads out;
  std::vector<double> grad_var;
  moment_pass(mean, var, embedded, &noise, &targets, &out.distortion, &out.grad_mean, &grad_var);

  out.block_kl_nats.assign(k_blocks, 0.0);
  out.grad_log_variance.assign(n, 0.0);
  const auto mp = prior.mean(), vp = prior.variance();
  double rate = 0.0;
  for (std::size_t k = 0; k < k_blocks; ++k) {
    if (frozen.frozen[k]) {
      for (std::size_t i : partition.blocks[k]) out.grad_mean[i] = 0.0;
      continue;
    }
    const double lambda = lambdas[k];
    double kl = 0.0;
    for (std::size_t i : partition.blocks[k]) {
      const double diff = mean[i] - mp[i];
      const double ratio = var[i] / vp[i];
      kl += 0.5 * ((ratio - 1.0) - std::log1p(ratio - 1.0) + diff * diff / vp[i]);
      out.grad_mean[i] += lambda * diff / vp[i];
      const double dvar = grad_var[i] + lambda * 0.5 * (1.0 / vp[i] - 1.0 / var[i]);
      out.grad_log_variance[i] = floored[i] ? 0.0 : dvar * var[i];
    }
    out.block_kl_nats[k] = kl;
    rate += lambda * kl;
  }
  out.total = out.distortion + rate;
  if (!std::isfinite(out.total)) throw DivergenceError("non-finite loss");
  return out;
}

std::vector<Eigen::Index> sample_rows(std::size_t n, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must be in (0, 1]");
  const std::size_t m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))), 1, n);
  std::vector<Eigen::Index> rows(n);
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  for (std::size_t i = 0; i < m; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
  rows.resize(m);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace vinr
