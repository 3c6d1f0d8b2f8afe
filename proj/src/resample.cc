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

#include "dccrn_vae/resample.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dvae {

std::vector<double> KaiserLowpass(int taps, double cutoff, double beta) {
  if (taps < 1 || taps % 2 == 0) throw std::invalid_argument("kaiser lowpass: taps must be odd");
  if (!(cutoff > 0 && cutoff < 0.5)) throw std::invalid_argument("kaiser lowpass: bad cutoff");
  const int half = taps / 2;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(taps);
  for (int n = 0; n < taps; ++n) {
    const double t = n - half;
    const double sinc = t == 0 ? 2 * cutoff
                               : std::sin(2 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t);
    const double r = half == 0 ? 0.0 : t / half;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1 - r * r))) / i0_beta;
    h[n] = sinc * w;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

Resampler::Resampler(int in_rate, int out_rate, double passband_hz,
                     double attenuation_db) {
  if (in_rate <= 0 || out_rate <= 0) throw std::invalid_argument("resampler: rates must be positive");
  const int g = std::gcd(in_rate, out_rate);
  up_ = out_rate / g;
  down_ = in_rate / g;
  const double high_rate = static_cast<double>(in_rate) * up_;
  const double stop_hz = 0.5 * std::min(in_rate, out_rate);
  if (!(passband_hz > 0 && passband_hz < stop_hz)) {
    throw std::invalid_argument("resampler: passband must lie below the lower Nyquist rate");
  }
  // Kaiser's design formulas.
  const double a = attenuation_db;
  const double beta = a > 50 ? 0.1102 * (a - 8.7)
                      : a >= 21 ? 0.5842 * std::pow(a - 21, 0.4) + 0.07886 * (a - 21)
                                : 0.0;
  const double width = 2 * std::numbers::pi * (stop_hz - passband_hz) / high_rate;
  int taps = static_cast<int>(std::ceil((a - 8) / (2.285 * width))) + 1;
  if (taps % 2 == 0) ++taps;
  kernel_ = KaiserLowpass(taps, 0.5 * (passband_hz + stop_hz) / high_rate, beta);
}

Resampler::Resampler(int in_rate, int out_rate)
    : Resampler(in_rate, out_rate, 0.45 * std::min(in_rate, out_rate)) {}

std::vector<double> Resampler::Apply(const std::vector<double>& x) const {
  const int64_t n_in = static_cast<int64_t>(x.size());
  const int64_t n_out = (n_in * up_ + down_ - 1) / down_;
  const int64_t half = static_cast<int64_t>(kernel_.size()) / 2;
  const int64_t taps = static_cast<int64_t>(kernel_.size());
  std::vector<double> y(n_out, 0.0);
  for (int64_t m = 0; m < n_out; ++m) {
    // Position in the zero-stuffed signal aligned with the kernel centre.
    const int64_t pos = m * down_ + half;
    const int64_t j_lo = std::max<int64_t>(0, (pos - taps + 1 + up_ - 1) / up_);
    const int64_t j_hi = std::min<int64_t>(n_in - 1, pos / up_);
    double acc = 0;
    for (int64_t j = j_lo; j <= j_hi; ++j) acc += x[j] * kernel_[pos - j * up_];
    y[m] = acc * up_;
  }
  return y;
}

}  // namespace dvae
