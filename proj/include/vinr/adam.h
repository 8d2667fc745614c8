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

#ifndef VINR_ADAM_H_
#define VINR_ADAM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "vinr/inr_model.h"

namespace vinr {

// Adam over the (mean, log-variance) parameters of a variational posterior.
class Adam {
 public:
  explicit Adam(std::size_t num_weights, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  // Coordinates with active[i] == false are left untouched, moments included.
  // An empty mask means every coordinate is active.
  void step(VariationalParams& params, std::span<const double> grad_mean,
            std::span<const double> grad_log_variance, const std::vector<bool>& active = {});

  double learning_rate() const { return lr_; }
  long steps() const { return t_; }

 private:
  void update(std::span<double> x, std::span<const double> g, std::vector<double>& m,
              std::vector<double>& v, const std::vector<bool>& active, double c1, double c2);

  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_mean_, v_mean_, m_logvar_, v_logvar_;
};

}  // namespace vinr

#endif  // VINR_ADAM_H_
