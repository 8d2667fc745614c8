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

// Independent reference implementations used as test oracles.

#ifndef VINR_TESTS_ORACLES_H_
#define VINR_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "vinr/data_io.h"
#include "vinr/random.h"
#include "vinr/variational.h"

namespace vinr::testing {

inline double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

// KL between 1-D Gaussians by composite Simpson quadrature over +-14 sd of q.
inline double quadrature_kl(double mq, double vq, double mp, double vp) {
  const int n = 20000;
  const double sd = std::sqrt(vq);
  const double lo = mq - 14.0 * sd, hi = mq + 14.0 * sd, h = (hi - lo) / n;
  auto f = [&](double x) {
    const double lq = normal_log_pdf(x, mq, vq);
    return std::exp(lq) * (lq - normal_log_pdf(x, mp, vp));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Monte Carlo estimate of KL(q || p) with draws from q.
inline double monte_carlo_kl(const DiagonalGaussian& q, const DiagonalGaussian& p,
                             std::size_t draws, Rng& rng) {
  double total = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    double lr = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double x = q.mean()[j] + std::sqrt(q.variance()[j]) * rng.normal();
      lr += normal_log_pdf(x, q.mean()[j], q.variance()[j]) -
            normal_log_pdf(x, p.mean()[j], p.variance()[j]);
    }
    total += lr;
  }
  return total / static_cast<double>(draws);
}

// Nelder-Mead in two dimensions.
inline std::array<double, 2> nelder_mead_2d(const std::function<double(double, double)>& f,
                                            std::array<double, 2> start, double scale,
                                            int iterations = 4000) {
  using P = std::array<double, 2>;
  std::array<P, 3> pts = {start, P{start[0] + scale, start[1]}, P{start[0], start[1] + scale}};
  std::array<double, 3> val;
  for (int i = 0; i < 3; ++i) val[i] = f(pts[i][0], pts[i][1]);
  auto at = [](const P& a, const P& b, double t) {
    return P{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };
  for (int it = 0; it < iterations; ++it) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
    const int best = order[0], mid = order[1], worst = order[2];
    const P centroid = {(pts[best][0] + pts[mid][0]) / 2, (pts[best][1] + pts[mid][1]) / 2};
    const P reflected = at(centroid, pts[worst], -1.0);
    const double fr = f(reflected[0], reflected[1]);
    if (fr < val[best]) {
      const P expanded = at(centroid, pts[worst], -2.0);
      const double fe = f(expanded[0], expanded[1]);
      if (fe < fr) {
        pts[worst] = expanded, val[worst] = fe;
      } else {
        pts[worst] = reflected, val[worst] = fr;
      }
    } else if (fr < val[mid]) {
      pts[worst] = reflected, val[worst] = fr;
    } else {
      const P contracted = at(centroid, pts[worst], 0.5);
      const double fc = f(contracted[0], contracted[1]);
      if (fc < val[worst]) {
        pts[worst] = contracted, val[worst] = fc;
      } else {
        for (int i : {mid, worst}) {
          pts[i] = at(pts[best], pts[i], 0.5);
          val[i] = f(pts[i][0], pts[i][1]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (val[i] < val[best]) best = i;
  }
  return pts[best];
}

// Relative error in the Euclidean norm.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

// Exact sampler of a 1-D Gaussian target by rejection from the prior, used
// as the reference distribution for REC outputs.
inline double rejection_sample(double mq, double vq, double mp, double vp, Rng& rng) {
  // log(q/p) is a concave quadratic when vq < vp; its maximum bounds the ratio.
  const double a = 0.5 / vp - 0.5 / vq;
  const double b = mq / vq - mp / vp;
  const double c = 0.5 * std::log(vp / vq) - mq * mq / (2 * vq) + mp * mp / (2 * vp);
  const double xmax = -b / (2 * a);
  const double log_m = a * xmax * xmax + b * xmax + c;
  while (true) {
    const double x = mp + std::sqrt(vp) * rng.normal();
    const double lr = a * x * x + b * x + c;
    if (std::log(rng.uniform()) <= lr - log_m) return x;
  }
}

// Smooth synthetic RGB image with a seeded pattern, quantized to 8 bits.
inline SignalBatch synthetic_image(std::uint32_t h, std::uint32_t w, std::uint64_t seed,
                                   std::uint32_t channels = 3) {
  Rng rng(seed);
  const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * w * channels);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t col = 0; col < w; ++col) {
      for (std::uint32_t ch = 0; ch < channels; ++ch) {
        const double v = 0.5 + 0.4 * std::sin(3.0 * a * r + 2.0 * b * col + ch * c * 2.0) *
                                   std::cos(0.7 * col * (ch + 1) * b);
        px[(static_cast<std::size_t>(r) * w + col) * channels + ch] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      }
    }
  }
  return image_batch(h, w, channels, px);
}

}  // namespace vinr::testing

#endif  // VINR_TESTS_ORACLES_H_
