/*
 * Copyright 2026 The voxcp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Gaussian depth uncertainty: interval probabilities and the
// Gaussian-vs-Dirac KL training loss for a per-pixel (mean, sigma) head.

#ifndef VOXCP_DEPTH_UQ_HPP_
#define VOXCP_DEPTH_UQ_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>

#include "voxcp/error.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

namespace depth_detail {

// Upper tail Q(x) = P(Z > x) and lower tail P(Z <= x), each from erfc so
// that far-tail values keep full relative precision.
inline double UpperTail(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}
inline double LowerTail(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace depth_detail

// P(z_lo <= Z <= z_hi) for Z ~ N(mean, sigma^2). Either bound may be
// infinite.
inline double GaussianCdfInterval(double z_lo, double z_hi, double mean,
                                  double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian interval: sigma must be positive");
  }
  if (!(z_lo <= z_hi)) {
    throw DomainError("gaussian interval: z_lo must not exceed z_hi");
  }
  if (z_lo == z_hi) return 0.0;
  const double a = (z_lo - mean) / sigma;
  const double b = (z_hi - mean) / sigma;
  double p;
  if (a >= 0.0) {
    p = depth_detail::UpperTail(a) - depth_detail::UpperTail(b);
  } else if (b <= 0.0) {
    p = depth_detail::LowerTail(b) - depth_detail::LowerTail(a);
  } else {
    p = 1.0 - depth_detail::LowerTail(a) - depth_detail::UpperTail(b);
  }
  return std::clamp(p, 0.0, 1.0);
}

// One pixel's term (d - mean)^2 / (2 sigma^2) + log(sigma).
inline double KlPixelLoss(double truth, double mean, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("kl loss: sigma must be positive");
  const double r = truth - mean;
  return r * r / (2.0 * sigma * sigma) + std::log(sigma);
}

struct KlLossReport {
  double loss = 0.0;
  Image<double> grad_mean;
  Image<double> grad_sigma;
  std::size_t valid_pixels = 0;
};

// Mean KL loss over pixels where truth > 0 and mean > 0, with analytic
// gradients w.r.t. the predicted mean and sigma. Masked pixels get zero
// gradient. Works in double throughout so it can be checked against finite
// differences.
inline KlLossReport KlLoss(const Image<double>& truth, const Image<double>& mean,
                           const Image<double>& sigma) {
  if (truth.height != mean.height || truth.width != mean.width ||
      sigma.height != mean.height || sigma.width != mean.width) {
    throw DomainError("kl loss: truth and estimate dims differ");
  }
  const std::size_t n = mean.size();
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(truth.data[i] > 0.0) || !(mean.data[i] > 0.0)) continue;
    if (!(sigma.data[i] > 0.0)) {
      throw DomainError("kl loss: sigma <= 0 on a valid pixel");
    }
    ++valid;
  }
  if (valid == 0) throw DomainError("kl loss: no valid pixels");

  KlLossReport report;
  report.valid_pixels = valid;
  report.grad_mean = Image<double>(mean.height, mean.width);
  report.grad_sigma = Image<double>(mean.height, mean.width);

  const double inv_p = 1.0 / static_cast<double>(valid);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(truth.data[i] > 0.0) || !(mean.data[i] > 0.0)) continue;
    const double s = sigma.data[i];
    const double r = truth.data[i] - mean.data[i];
    sum += r * r / (2.0 * s * s) + std::log(s);
    report.grad_mean.data[i] = -r / (s * s) * inv_p;
    report.grad_sigma.data[i] = (-r * r / (s * s * s) + 1.0 / s) * inv_p;
  }
  report.loss = sum * inv_p;
  return report;
}

inline KlLossReport KlLoss(const GroundTruthDepth& truth,
                           const DepthEstimate& est) {
  if (truth.depth.height != est.height() || truth.depth.width != est.width()) {
    throw DomainError("kl loss: truth and estimate dims differ");
  }
  if (!est.has_sigma()) throw DomainError("kl loss: estimate has no sigma");
  auto widen = [](const Image<float>& img) {
    Image<double> out(img.height, img.width);
    std::copy(img.data.begin(), img.data.end(), out.data.begin());
    return out;
  };
  return KlLoss(widen(truth.depth), widen(est.mean), widen(est.sigma));
}

}  // namespace voxcp

#endif  // VOXCP_DEPTH_UQ_HPP_
