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

#ifndef DCCRN_VAE_DATA_H_
#define DCCRN_VAE_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dccrn_vae/wav.h"

namespace dvae {

// Samples below this level relative to the peak are excluded from power
// estimates.
inline constexpr double kActivityThresholdDb = -40.0;
inline constexpr double kMixPeakLimit = 0.99;

// Mean square over samples within 40 dB of the peak; 0 for a silent signal.
double ActivePower(const std::vector<float>& samples,
                   double threshold_db = kActivityThresholdDb);

struct MixResult {
  Waveform noisy;         // y = x + g d, possibly rescaled
  Waveform noise_scaled;  // g d, same rescale
  Waveform clean;         // x, same rescale
  double gain = 1.0;      // g
  double rescale = 1.0;   // joint peak rescale (1 when not triggered)
};

// g = sqrt(P_x / (P_d * 10^(snr/10))), y = x + g d. If max|y| > 0.99 all
// three signals are scaled by 0.99 / max|y|.
MixResult MixAtSnr(const Waveform& clean, const Waveform& noise,
                   double snr_db);

// Harmonic stack with drifting 100-300 Hz fundamental, moving formant
// emphasis, 2-6 Hz syllabic modulation and silent syllables; peak 0.5.
Waveform GenSyntheticSpeech(uint64_t seed, double duration_s,
                            int sample_rate = 16000);

enum class NoiseKind { kWhite, kPink, kModulated };

std::string NoiseKindName(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string& name);

// Peak-normalized to 0.5.
Waveform GenSyntheticNoise(NoiseKind kind, uint64_t seed, double duration_s,
                           int sample_rate = 16000);

struct MixRecord {
  std::string clean;  // relative to the manifest directory
  std::string noise;
  double snr_db = 0.0;
  std::string split;  // train | valid | test
  uint64_t seed = 0;
};

struct MixManifest {
  std::vector<MixRecord> records;
  int sample_rate = 16000;
  std::string base_dir;  // directory holding the manifest

  std::vector<MixRecord> Split(const std::string& split) const;
  std::string Resolve(const std::string& relative) const;
};

// One JSON object per line: clean, noise, snr_db, split, seed, sample_rate.
void WriteManifest(const MixManifest& manifest, const std::string& path);
MixManifest ReadManifest(const std::string& path);

struct DatasetConfig {
  std::string out_dir = "data";
  int num_utterances = 100;
  double duration_s = 2.0;
  double snr_min_db = -10.0;
  double snr_max_db = 15.0;
  double train_fraction = 0.7;
  double valid_fraction = 0.2;
  uint64_t seed = 1234;
  int sample_rate = 16000;
};

// Generates one clean and one noise source per record under out_dir,
// assigns 70/20/10 splits by source, draws snr_db uniformly and writes
// out_dir/manifest.jsonl.
MixManifest BuildDataset(const DatasetConfig& config);

}  // namespace dvae

#endif  // DCCRN_VAE_DATA_H_
