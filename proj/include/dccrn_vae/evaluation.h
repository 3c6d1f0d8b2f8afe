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

#ifndef DCCRN_VAE_EVALUATION_H_
#define DCCRN_VAE_EVALUATION_H_

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

#include "dccrn_vae/data.h"
#include "dccrn_vae/training.h"
#include "dccrn_vae/wav.h"

namespace dvae {

struct EvalRow {
  std::string id;
  double snr_db = 0;
  double si_sdr_noisy = 0;
  double si_sdr_enhanced = 0;
  double stoi_noisy = 0;
  double stoi_enhanced = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  // Arithmetic mean of every numeric column; id is "mean".
  EvalRow Mean() const;
  // Header: id,snr_db,si_sdr_noisy,si_sdr_enhanced,stoi_noisy,stoi_enhanced
  void WriteCsv(const std::string& path) const;
  nlohmann::json AggregateJson() const;
  void WriteJson(const std::string& path) const;
};

inline constexpr const char* kEvalCsvHeader =
    "id,snr_db,si_sdr_noisy,si_sdr_enhanced,stoi_noisy,stoi_enhanced";

// (noisy, clean) -> enhanced, same length as noisy.
using EnhanceFn = std::function<Waveform(const Waveform&, const Waveform&)>;

// Mixes each record of `split` at its manifest SNR, enhances the mixture
// and scores noisy and enhanced signals against the (rescaled) clean one.
EvalReport EvaluateCorpus(const MixManifest& manifest, const EnhanceFn& enhance,
                          const std::string& split = "test");
EvalReport EvaluateCorpus(const MixManifest& manifest, const std::string& ckpt_path,
                          EnhanceMode mode, const std::string& split = "test");

}  // namespace dvae

#endif  // DCCRN_VAE_EVALUATION_H_
