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

#include "dccrn_vae/grad_check.h"

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dvae {

GradCheckResult GradCheck(const std::function<at::Tensor()>& scalar_fn,
                          const NamedTensors& params,
                          const GradCheckOptions& options) {
  for (const auto& [name, p] : params) {
    if (p.scalar_type() != at::kDouble) {
      throw std::invalid_argument("grad_check needs 64-bit tensors: " + name);
    }
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
  at::Tensor out = scalar_fn();
  if (out.numel() != 1) throw std::invalid_argument("grad_check probe must be scalar");
  std::vector<at::Tensor> leaves;
  for (const auto& kv : params) leaves.push_back(kv.second);
  std::vector<at::Tensor> grads =
      torch::autograd::grad({out}, leaves, {}, /*retain_graph=*/false,
                            /*create_graph=*/false, /*allow_unused=*/true);

  double scale = 0.0;
  for (auto& g : grads) {
    if (!g.defined()) continue;
    scale = std::max(scale, g.abs().max().item<double>());
  }
  const double floor = std::max(1e-3 * scale, 1e-12);

  auto eval = [&]() {
    at::NoGradGuard guard;
    return scalar_fn().item<double>();
  };

  const double f0 = eval();
  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  const double h = options.eps;
  for (std::size_t t = 0; t < params.size(); ++t) {
    const auto& [name, p] = params[t];
    at::Tensor g = grads[t].defined() ? grads[t].contiguous()
                                      : at::zeros_like(p).contiguous();
    const int64_t n = p.numel();
    std::vector<int64_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_elements_per_tensor > 0 &&
        n > options.max_elements_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_elements_per_tensor);
    }
    at::Tensor flat = p.detach().view({-1});
    const double* gd = g.data_ptr<double>();
    for (int64_t i : idx) {
      const double orig = flat[i].item<double>();
      auto at_offset = [&](double dx) {
        flat[i].fill_(orig + dx);
        return eval();
      };
      const double fp = at_offset(h), fm = at_offset(-h);
      flat[i].fill_(orig);
      const double central = (fp - fm) / (2.0 * h);
      const double forward = (fp - f0) / h, backward = (f0 - fm) / h;
      const double analytic = gd[i];
      const double denom = std::max({std::abs(analytic), std::abs(central), floor});
      if (std::abs(forward - backward) > options.kink_tolerance * denom) {
        ++result.skipped;
        continue;
      }
      const double rel = std::abs(analytic - central) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || !std::isfinite(rel)) {
        result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

at::Tensor ProbeWeights(at::IntArrayRef shape, uint64_t seed,
                        at::ScalarType dtype) {
  at::Generator gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return at::empty(shape, at::TensorOptions().dtype(at::kDouble))
      .normal_(0.0, 1.0, gen)
      .to(dtype);
}

}  // namespace dvae
