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

#ifndef DCCRN_VAE_VERIFICATION_H_
#define DCCRN_VAE_VERIFICATION_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dccrn_vae/grad_check.h"

namespace dvae {

struct CheckOutcome {
  std::string family;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::vector<CheckOutcome> checks;

  // family -> (passed, total)
  std::map<std::string, std::pair<int, int>> Counts() const;
  bool AllPassed() const;
};

// Fast invariant checks grouped by family (stft, complex-gaussian,
// complex-nn, losses, data-mixing, evaluation, checkpoint).
SuiteReport RunSelfTest(uint64_t seed = 7);

// Finite-difference checks of every complex layer and of the desk-profile
// encoder, decoder and discriminator in 64-bit, against `max_rel_error`.
SuiteReport RunGradCheckSuite(double max_rel_error = 1e-4,
                              const GradCheckOptions& options = {});

}  // namespace dvae

#endif  // DCCRN_VAE_VERIFICATION_H_
