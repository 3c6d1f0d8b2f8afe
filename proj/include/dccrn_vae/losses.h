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

#ifndef DCCRN_VAE_LOSSES_H_
#define DCCRN_VAE_LOSSES_H_

#include <ATen/ATen.h>

#include <fstream>
#include <map>
#include <string>

#include "dccrn_vae/complex_gaussian.h"
#include "dccrn_vae/models.h"
#include "dccrn_vae/wav.h"

namespace dvae {

inline constexpr double kDefaultAlpha = 0.25;

struct SiSnrOptions {
  bool zero_mean = true;
  // Both energies are offset by guard * target energy, capping the ratio
  // at 10 * log10((1 + guard) / guard), about 80 dB.
  double guard = 1e-8;
};

// Scale-invariant SNR in dB. ref/est are (N) or (B, N); returns a scalar or
// (B). Throws on an all-zero reference or mismatched shapes.
at::Tensor SiSnr(const at::Tensor& ref, const at::Tensor& est,
                 const SiSnrOptions& options = {});
double SiSnr(const Waveform& ref, const Waveform& est,
             const SiSnrOptions& options = {});

// A total plus its named parts; `total` is the only differentiable entry
// that callers backpropagate.
struct LossBreakdown {
  at::Tensor total;
  std::map<std::string, at::Tensor> components;

  double value(const std::string& name) const;
  double total_value() const { return total.item<double>(); }
};

// KL(posterior || N_c(0, I, 0)) - SI-SNR(target, recon); batch means.
LossBreakdown Stage1Loss(const CGDParams& posterior, const at::Tensor& recon,
                         const at::Tensor& target, at::Generator& gen,
                         int kl_samples = 1);

// L_kl = KL(q_y || p_x) - alpha * KL(q_y || p_d)
// L_re = sum over levels of mean((r_x - r_yx)^2) over both parts
// total = L_kl + L_re
LossBreakdown LatentLoss(const CGDParams& q_y, const CGDParams& p_x,
                         const CGDParams& p_d, const SkipFeatureStack& r_x,
                         const SkipFeatureStack& r_yx, double alpha,
                         at::Generator& gen, int kl_samples = 1);

// Deterministic residual part of LatentLoss.
at::Tensor ResidualLoss(const SkipFeatureStack& r_x,
                        const SkipFeatureStack& r_yx);

// (D(G(z)) - 1)^2 - SI-SNR(target, recon)
LossBreakdown GanGeneratorLoss(const at::Tensor& d_fake_score,
                               const at::Tensor& recon,
                               const at::Tensor& target);

// D(G(z))^2 + (D(x) - 1)^2
LossBreakdown GanDiscriminatorLoss(const at::Tensor& d_fake_score,
                                   const at::Tensor& d_real_score);

// Appends "step,stage,component,value" rows.
class LossLog {
 public:
  explicit LossLog(const std::string& path);
  void Write(int64_t step, const std::string& stage, const LossBreakdown& loss);

 private:
  std::ofstream os_;
};

}  // namespace dvae

#endif  // DCCRN_VAE_LOSSES_H_
