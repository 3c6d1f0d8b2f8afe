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

#ifndef DCCRN_VAE_RESAMPLE_H_
#define DCCRN_VAE_RESAMPLE_H_

#include <vector>

namespace dvae {

// Rational polyphase resampler with a Kaiser-windowed sinc kernel designed
// at the upsampled rate. For 16 kHz -> 10 kHz (up 5, down 8) the passband
// edge sits at 4.5 kHz, the stopband at 5 kHz and the stopband attenuation
// at 80 dB, which gives an 805-tap kernel.
class Resampler {
 public:
  Resampler(int in_rate, int out_rate, double passband_hz,
            double attenuation_db = 80.0);
  // Uses passband = 0.9 * min(in_rate, out_rate) / 2.
  Resampler(int in_rate, int out_rate);

  int up() const { return up_; }
  int down() const { return down_; }
  const std::vector<double>& kernel() const { return kernel_; }

  // Output length is ceil(len * up / down); the kernel delay is removed.
  std::vector<double> Apply(const std::vector<double>& x) const;

 private:
  int up_;
  int down_;
  std::vector<double> kernel_;  // odd length, unit DC gain at the high rate
};

// Lowpass of odd length `taps`, cutoff as a fraction of the sample rate
// (0 < cutoff < 0.5), Kaiser shape `beta`, normalized to unit DC gain.
std::vector<double> KaiserLowpass(int taps, double cutoff, double beta);

}  // namespace dvae

#endif  // DCCRN_VAE_RESAMPLE_H_
