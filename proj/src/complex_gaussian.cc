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

#include "dccrn_vae/complex_gaussian.h"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dvae {

namespace {

struct Cov2 {
  at::Tensor c11, c12, c22;
};

Cov2 AugmentedCovariance(const CGDParams& p) {
  return {0.5 * (p.sigma + p.delta_re), 0.5 * p.delta_im,
          0.5 * (p.sigma - p.delta_re)};
}

// sqrt(max(x, 0) + eps) - sqrt(eps): exact zero at x = 0 with a finite slope.
at::Tensor SafeSqrt(const at::Tensor& x) {
  constexpr double kEps = 1e-12;
  return at::sqrt(at::relu(x) + kEps) - std::sqrt(kEps);
}

}  // namespace

CGDParams CGDParams::Detached() const {
  return {mu_re.detach(), mu_im.detach(), sigma.detach(), delta_re.detach(),
          delta_im.detach()};
}

CGDParams MakeCgd(const at::Tensor& mu_raw_re, const at::Tensor& mu_raw_im,
                  const at::Tensor& sigma_raw, const at::Tensor& delta_raw_re,
                  const at::Tensor& delta_raw_im) {
  at::Tensor sigma = at::softplus(sigma_raw) + kSigmaFloor;
  // |d| with a tiny offset keeps the gradient finite at the origin, where
  // tanh(m) / m -> 1 and delta -> 0.
  at::Tensor mag =
      at::sqrt(delta_raw_re * delta_raw_re + delta_raw_im * delta_raw_im + 1e-30);
  at::Tensor gain = sigma * (kMaxImpropriety * at::tanh(mag) / mag);
  return {mu_raw_re, mu_raw_im, sigma, gain * delta_raw_re,
          gain * delta_raw_im};
}

CGDParams StandardPrior(at::IntArrayRef shape, at::ScalarType dtype) {
  auto opts = at::TensorOptions().dtype(dtype);
  return {at::zeros(shape, opts), at::zeros(shape, opts), at::ones(shape, opts),
          at::zeros(shape, opts), at::zeros(shape, opts)};
}

CGDParams StandardPriorLike(const CGDParams& like) {
  return StandardPrior(like.mu_re.sizes(), like.mu_re.scalar_type());
}

void ValidateCgd(const CGDParams& p) {
  const auto& shape = p.mu_re.sizes();
  for (const at::Tensor* t :
       {&p.mu_im, &p.sigma, &p.delta_re, &p.delta_im}) {
    if (!t->sizes().equals(shape)) {
      throw std::invalid_argument("complex Gaussian parameter shapes differ");
    }
  }
  at::NoGradGuard guard;
  for (const at::Tensor* t :
       {&p.mu_re, &p.mu_im, &p.sigma, &p.delta_re, &p.delta_im}) {
    if (!at::isfinite(*t).all().item<bool>()) {
      throw NonFiniteParamsError("complex Gaussian parameters not finite");
    }
  }
  if ((p.sigma <= 0).any().item<bool>()) {
    throw std::invalid_argument("complex Gaussian requires sigma > 0");
  }
  at::Tensor mag = at::sqrt(p.delta_re * p.delta_re + p.delta_im * p.delta_im);
  if ((mag > p.sigma * (1.0 + 1e-6)).any().item<bool>()) {
    throw std::invalid_argument(
        "complex Gaussian requires |delta| <= sigma (augmented covariance "
        "not positive semidefinite)");
  }
}

LatentSample SampleCgd(const CGDParams& p, const at::Tensor& noise_re,
                       const at::Tensor& noise_im) {
  ValidateCgd(p);
  Cov2 c = AugmentedCovariance(p);
  at::Tensor l11 = SafeSqrt(c.c11);
  at::Tensor l21 = c.c12 / (l11 + 1e-12);
  at::Tensor l22 = SafeSqrt(c.c22 - l21 * l21);
  return {p.mu_re + l11 * noise_re, p.mu_im + l21 * noise_re + l22 * noise_im};
}

LatentSample SampleCgd(const CGDParams& p, at::Generator& gen) {
  auto opts = p.mu_re.options().requires_grad(false);
  at::Tensor nr = at::empty(p.mu_re.sizes(), opts).normal_(0.0, 1.0, gen);
  at::Tensor ni = at::empty(p.mu_re.sizes(), opts).normal_(0.0, 1.0, gen);
  return SampleCgd(p, nr, ni);
}

at::Tensor CgdLogDensity(const CGDParams& p, const LatentSample& z) {
  ValidateCgd(p);
  Cov2 c = AugmentedCovariance(p);
  at::Tensor det = (c.c11 * c.c22 - c.c12 * c.c12).clamp_min(kDetFloor);
  at::Tensor vr = z.re - p.mu_re;
  at::Tensor vi = z.im - p.mu_im;
  at::Tensor quad = (c.c22 * vr * vr - 2.0 * c.c12 * vr * vi + c.c11 * vi * vi) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * at::log(det) - 0.5 * quad;
}

KlEstimate KlSampled(const CGDParams& p, const CGDParams& q, int n_samples,
                     at::Generator& gen, bool batched) {
  if (n_samples < 1) throw std::invalid_argument("kl_sampled needs n_samples >= 1");
  // All draws at once along a new leading axis.
  auto expand = [n_samples](const CGDParams& c) {
    auto e = [n_samples](const at::Tensor& t) {
      std::vector<int64_t> shape{n_samples};
      shape.insert(shape.end(), t.sizes().begin(), t.sizes().end());
      return t.unsqueeze(0).expand(shape);
    };
    return CGDParams{e(c.mu_re), e(c.mu_im), e(c.sigma), e(c.delta_re), e(c.delta_im)};
  };
  const CGDParams pn = expand(p);
  const LatentSample z = SampleCgd(pn, gen);
  at::Tensor diff = CgdLogDensity(pn, z) - CgdLogDensity(expand(q), z);
  at::Tensor stacked = batched && p.mu_re.dim() > 0
                           ? diff.reshape({n_samples, p.mu_re.size(0), -1}).sum(2).mean(1)
                           : diff.reshape({n_samples, -1}).sum(1);
  KlEstimate est{stacked.mean(), 0.0};
  if (n_samples > 1) {
    est.stderr_ = stacked.detach().to(at::kDouble).std().item<double>() /
                  std::sqrt(static_cast<double>(n_samples));
  }
  return est;
}

at::Tensor KlAnalytic(const CGDParams& p, const CGDParams& q) {
  ValidateCgd(p);
  ValidateCgd(q);
  Cov2 cp = AugmentedCovariance(p);
  Cov2 cq = AugmentedCovariance(q);
  at::Tensor det_p = cp.c11 * cp.c22 - cp.c12 * cp.c12;
  at::Tensor det_q = cq.c11 * cq.c22 - cq.c12 * cq.c12;
  if ((det_q <= 0).any().item<bool>()) {
    throw std::invalid_argument("kl_analytic: singular covariance in q");
  }
  // tr(Cq^-1 Cp) with Cq^-1 = adj(Cq) / det_q.
  at::Tensor trace =
      (cq.c22 * cp.c11 - 2.0 * cq.c12 * cp.c12 + cq.c11 * cp.c22) / det_q;
  at::Tensor dr = q.mu_re - p.mu_re;
  at::Tensor di = q.mu_im - p.mu_im;
  at::Tensor quad = (cq.c22 * dr * dr - 2.0 * cq.c12 * dr * di + cq.c11 * di * di) / det_q;
  at::Tensor kl = 0.5 * (trace + quad - 2.0 + at::log(det_q / det_p));
  return kl.sum();
}

at::Generator MakeGenerator(uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

}  // namespace dvae
