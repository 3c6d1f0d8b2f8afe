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

#ifndef DCCRN_VAE_STOI_H_
#define DCCRN_VAE_STOI_H_

#include <vector>

#include "dccrn_vae/wav.h"

namespace dvae {

// Short-time objective intelligibility with the published constants:
// 10 kHz analysis rate, 256-sample Hann frames at 50% overlap, 512-point
// spectra, 15 third-octave bands from 150 Hz, 30-frame (384 ms) segments,
// -15 dB lower SDR bound and 40 dB silent-frame removal.
namespace stoi_constants {
inline constexpr int kRate = 10000;
inline constexpr int kFrame = 256;
inline constexpr int kFft = 512;
inline constexpr int kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr int kSegment = 30;
inline constexpr double kBetaDb = -15.0;
inline constexpr double kDynamicRangeDb = 40.0;
}  // namespace stoi_constants

// Returns a value clamped to [0, 1]. Throws std::invalid_argument on
// unequal lengths or rates, a silent reference, or fewer than 30 frames
// left after silent-frame removal.
double Stoi(const Waveform& ref, const Waveform& est);
double Stoi(const std::vector<double>& ref, const std::vector<double>& est,
            int sample_rate);

// Third-octave band matrix (kBands x (kFft / 2 + 1)) as 0/1 weights.
std::vector<std::vector<double>> ThirdOctaveBands();

}  // namespace dvae

#endif  // DCCRN_VAE_STOI_H_
