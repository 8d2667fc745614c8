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

#include "vinr/adam.h"

#include <cmath>

#include "vinr/errors.h"

namespace vinr {

Adam::Adam(std::size_t num_weights, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_mean_(num_weights, 0.0),
      v_mean_(num_weights, 0.0),
      m_logvar_(num_weights, 0.0),
      v_logvar_(num_weights, 0.0) {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

void Adam::update(std::span<double> x, std::span<const double> g, std::vector<double>& m,
                  std::vector<double>& v, const std::vector<bool>& active, double c1,
                  double c2) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!active.empty() && !active[i]) continue;
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
    x[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
  }
}

void Adam::step(VariationalParams& params, std::span<const double> grad_mean,
                std::span<const double> grad_log_variance, const std::vector<bool>& active) {
  if (params.mean.size() != m_mean_.size() || grad_mean.size() != m_mean_.size() ||
      grad_log_variance.size() != m_mean_.size()) {
    throw InvalidArgument("Adam: parameter size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  update(params.mean, grad_mean, m_mean_, v_mean_, active, c1, c2);
  update(params.log_variance, grad_log_variance, m_logvar_, v_logvar_, active, c1, c2);
}

}  // namespace vinr
