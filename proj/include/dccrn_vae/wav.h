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

#ifndef DCCRN_VAE_WAV_H_
#define DCCRN_VAE_WAV_H_

#include <string>
#include <vector>

namespace dvae {

// Mono audio at a fixed sample rate. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws std::invalid_argument on non-positive rate or non-finite samples.
void ValidateWaveform(const Waveform& wave);

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float data.
// PCM16 is scaled by 1/32768. Multichannel files are rejected.
Waveform LoadWav(const std::string& path);

// Writes 16-bit PCM. Samples are clipped to [-1, 1 - 1/32768] first.
void SaveWav(const Waveform& wave, const std::string& path);

}  // namespace dvae

#endif  // DCCRN_VAE_WAV_H_
