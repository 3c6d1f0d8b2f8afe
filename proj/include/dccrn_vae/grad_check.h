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

#ifndef DCCRN_VAE_GRAD_CHECK_H_
#define DCCRN_VAE_GRAD_CHECK_H_

#include <ATen/ATen.h>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dvae {

struct GradCheckOptions {
  // Small enough that PReLU kinks are rarely crossed; rounding error in
  // 64-bit stays near 1e-10.
  double eps = 1e-6;
  // Elements checked per tensor, chosen deterministically from `seed`;
  // <= 0 checks every element.
  int64_t max_elements_per_tensor = -1;
  uint64_t seed = 0;
  // Elements whose one-sided differences disagree by more than this
  // fraction of the gradient scale straddle a kink and are skipped.
  double kink_tolerance = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int64_t checked = 0;
  int64_t skipped = 0;
  std::string worst;  // "<tensor>[<flat index>]"
};

using NamedTensors = std::vector<std::pair<std::string, at::Tensor>>;

// Compares the backpropagated gradient of `scalar_fn` with central finite
// differences for the given leaf tensors (64-bit, requires_grad). The
// relative error of an element is |g - fd| / max(|g|, |fd|, 1e-3 * max|g|).
GradCheckResult GradCheck(const std::function<at::Tensor()>& scalar_fn,
                          const NamedTensors& params,
                          const GradCheckOptions& options = {});

// Fixed random projection turning a tensor output into a scalar probe.
at::Tensor ProbeWeights(at::IntArrayRef shape, uint64_t seed,
                        at::ScalarType dtype = at::kDouble);

}  // namespace dvae

#endif  // DCCRN_VAE_GRAD_CHECK_H_
