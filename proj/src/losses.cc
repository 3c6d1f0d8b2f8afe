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

#include "dccrn_vae/losses.h"

#include <cmath>
#include <stdexcept>

#include "dccrn_vae/stft.h"

namespace dvae {

at::Tensor SiSnr(const at::Tensor& ref, const at::Tensor& est,
                 const SiSnrOptions& options) {
  if (!ref.sizes().equals(est.sizes())) {
    throw std::invalid_argument("si_snr: reference and estimate lengths differ");
  }
  at::Tensor r = ref, e = est;
  if (options.zero_mean) {
    r = r - r.mean(-1, /*keepdim=*/true);
    e = e - e.mean(-1, /*keepdim=*/true);
  }
  at::Tensor ref_energy = (r * r).sum(-1, /*keepdim=*/true);
  if ((ref_energy.detach() <= 0).any().item<bool>()) {
    throw std::invalid_argument("si_snr: reference is all zero");
  }
  at::Tensor target = (e * r).sum(-1, true) / ref_energy * r;
  at::Tensor residual = e - target;
  at::Tensor t_energy = (target * target).sum(-1);
  at::Tensor n_energy = (residual * residual).sum(-1);
  constexpr double kTiny = 1e-20;
  // (1 + g) t / (n + g t): equal energies give exactly 0 dB and a perfect
  // estimate gives 10 log10(1 + 1/g).
  return 10.0 * at::log10(((1.0 + options.guard) * t_energy + kTiny) /
                          (n_energy + options.guard * t_energy + kTiny));
}

double SiSnr(const Waveform& ref, const Waveform& est,
             const SiSnrOptions& options) {
  return SiSnr(ToTensor(ref, at::kDouble), ToTensor(est, at::kDouble), options)
      .item<double>();
}

double LossBreakdown::value(const std::string& name) const {
  auto it = components.find(name);
  if (it == components.end()) {
    throw std::out_of_range("loss component not found: " + name);
  }
  return it->second.item<double>();
}

LossBreakdown Stage1Loss(const CGDParams& posterior, const at::Tensor& recon,
                         const at::Tensor& target, at::Generator& gen,
                         int kl_samples) {
  const bool batched = recon.dim() == 2;
  at::Tensor kl = KlSampled(posterior, StandardPriorLike(posterior), kl_samples,
                            gen, batched)
                      .value;
  at::Tensor sisnr = SiSnr(target, recon).mean();
  LossBreakdown out;
  out.total = kl - sisnr;
  out.components = {{"kl", kl.detach()}, {"si_snr", sisnr.detach()}};
  return out;
}

at::Tensor ResidualLoss(const SkipFeatureStack& r_x,
                        const SkipFeatureStack& r_yx) {
  if (r_x.size() != r_yx.size() || r_x.empty()) {
    throw std::invalid_argument("residual loss: skip stacks have different depths");
  }
  at::Tensor total;
  for (std::size_t l = 0; l < r_x.size(); ++l) {
    if (!r_x[l].re.sizes().equals(r_yx[l].re.sizes()) ||
        !r_x[l].im.sizes().equals(r_yx[l].im.sizes())) {
      throw std::invalid_argument("residual loss: shape mismatch at level " +
                                  std::to_string(l));
    }
    at::Tensor dr = r_x[l].re - r_yx[l].re;
    at::Tensor di = r_x[l].im - r_yx[l].im;
    at::Tensor level = 0.5 * ((dr * dr).mean() + (di * di).mean());
    total = total.defined() ? total + level : level;
  }
  return total;
}

LossBreakdown LatentLoss(const CGDParams& q_y, const CGDParams& p_x,
                         const CGDParams& p_d, const SkipFeatureStack& r_x,
                         const SkipFeatureStack& r_yx, double alpha,
                         at::Generator& gen, int kl_samples) {
  if (alpha < 0) throw std::invalid_argument("latent loss: alpha must be >= 0");
  if (!q_y.mu_re.sizes().equals(p_x.mu_re.sizes()) ||
      !q_y.mu_re.sizes().equals(p_d.mu_re.sizes())) {
    throw std::invalid_argument("latent loss: posterior shapes differ");
  }
  const bool batched = q_y.mu_re.dim() == 3;
  at::Tensor kl_x = KlSampled(q_y, p_x, kl_samples, gen, batched).value;
  at::Tensor kl_d = KlSampled(q_y, p_d, kl_samples, gen, batched).value;
  at::Tensor kl = kl_x - alpha * kl_d;
  at::Tensor re = ResidualLoss(r_x, r_yx);
  LossBreakdown out;
  out.total = kl + re;
  out.components = {{"kl_qy_px", kl_x.detach()},
                    {"kl_qy_pd", kl_d.detach()},
                    {"kl", kl.detach()},
                    {"residual", re.detach()},
                    {"alpha", at::scalar_tensor(alpha, at::kDouble)}};
  return out;
}

LossBreakdown GanGeneratorLoss(const at::Tensor& d_fake_score,
                               const at::Tensor& recon,
                               const at::Tensor& target) {
  at::Tensor adv = (d_fake_score - 1.0).pow(2).mean();
  at::Tensor sisnr = SiSnr(target, recon).mean();
  LossBreakdown out;
  out.total = adv - sisnr;
  out.components = {{"adv", adv.detach()}, {"si_snr", sisnr.detach()}};
  return out;
}

LossBreakdown GanDiscriminatorLoss(const at::Tensor& d_fake_score,
                                   const at::Tensor& d_real_score) {
  at::Tensor fake = d_fake_score.pow(2).mean();
  at::Tensor real = (d_real_score - 1.0).pow(2).mean();
  LossBreakdown out;
  out.total = fake + real;
  out.components = {{"fake", fake.detach()}, {"real", real.detach()}};
  return out;
}

LossLog::LossLog(const std::string& path) : os_(path, std::ios::app) {
  if (!os_) throw std::runtime_error("cannot open loss log: " + path);
  os_.seekp(0, std::ios::end);
  if (os_.tellp() == 0) os_ << "step,stage,component,value\n";
}

void LossLog::Write(int64_t step, const std::string& stage,
                    const LossBreakdown& loss) {
  os_ << step << ',' << stage << ",total," << loss.total_value() << '\n';
  for (const auto& [name, v] : loss.components) {
    os_ << step << ',' << stage << ',' << name << ',' << v.item<double>() << '\n';
  }
  os_.flush();
}

}  // namespace dvae
