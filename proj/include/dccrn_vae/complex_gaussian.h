// Copyright 2026 The DCCRN-VAE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DCCRN_VAE_COMPLEX_GAUSSIAN_H_
#define DCCRN_VAE_COMPLEX_GAUSSIAN_H_

#include <ATen/ATen.h>

#include <cstdint>
#include <optional>

namespace dvae {

// Diagonal complex Gaussian N_c(mu, sigma, delta) evaluated elementwise.
// Tensors share one shape, typically (B, L, T) or (L, T). sigma is the
// covariance E|z - mu|^2 and delta the pseudo-covariance E[(z - mu)^2].
// The pair (Re z, Im z) is then a real bivariate normal with covariance
//   C = 0.5 * [[sigma + Re delta, Im delta], [Im delta, sigma - Re delta]].
struct CGDParams {
  at::Tensor mu_re;
  at::Tensor mu_im;
  at::Tensor sigma;
  at::Tensor delta_re;
  at::Tensor delta_im;

  CGDParams Detached() const;
};

struct LatentSample {
  at::Tensor re;
  at::Tensor im;
};

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kDetFloor = 1e-9;
// |delta| / sigma never exceeds this, so the augmented covariance stays
// nonsingular even when tanh saturates in floating point.
inline constexpr double kMaxImpropriety = 1.0 - 1e-4;

// Maps unconstrained head outputs onto valid parameters:
//   sigma = softplus(sigma_raw) + 1e-6
//   delta = sigma * tanh(|delta_raw|) * delta_raw / |delta_raw|
CGDParams MakeCgd(const at::Tensor& mu_raw_re, const at::Tensor& mu_raw_im,
                  const at::Tensor& sigma_raw, const at::Tensor& delta_raw_re,
                  const at::Tensor& delta_raw_im);

// mu = 0, sigma = 1, delta = 0 with the given shape.
CGDParams StandardPrior(at::IntArrayRef shape,
                        at::ScalarType dtype = at::kFloat);
CGDParams StandardPriorLike(const CGDParams& like);

class NonFiniteParamsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws NonFiniteParamsError on NaN or Inf entries and
// std::invalid_argument on sigma <= 0, |delta| > sigma (up to a
// relative 1e-6 slack).
void ValidateCgd(const CGDParams& p);

// Reparameterized draw z = mu + L n, L the Cholesky factor of C, from
// caller-supplied standard normal noise (two tensors shaped like mu).
LatentSample SampleCgd(const CGDParams& p, const at::Tensor& noise_re,
                       const at::Tensor& noise_im);
// Draws the noise from `gen`.
LatentSample SampleCgd(const CGDParams& p, at::Generator& gen);

// Elementwise log density (same shape as mu).
at::Tensor CgdLogDensity(const CGDParams& p, const LatentSample& z);

struct KlEstimate {
  at::Tensor value;     // scalar, differentiable
  double stderr_ = 0;   // standard error across the draws (0 when n == 1)
};

// Monte Carlo KL(p || q): draws z ~ p and averages log p(z) - log q(z).
// The per-draw value is summed over all dims except the leading batch dim
// (if `batched`) and then averaged over the batch.
KlEstimate KlSampled(const CGDParams& p, const CGDParams& q, int n_samples,
                     at::Generator& gen, bool batched = false);

// Closed form via the equivalent 2-D real Gaussians, summed over elements.
at::Tensor KlAnalytic(const CGDParams& p, const CGDParams& q);

// Seeded CPU generator.
at::Generator MakeGenerator(uint64_t seed);

}  // namespace dvae

#endif  // DCCRN_VAE_COMPLEX_GAUSSIAN_H_
