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

#include "dccrn_vae/stoi.h"

#include <ATen/ATen.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dccrn_vae/resample.h"

namespace dvae {

namespace {

using namespace stoi_constants;

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Hann window without the zero end points.
std::vector<double> StoiWindow() {
  std::vector<double> w(kFrame);
  for (int n = 0; n < kFrame; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * (n + 1) / (kFrame + 1));
  }
  return w;
}

// Frame starts used throughout: 0, hop, ... strictly below len - kFrame.
std::vector<int64_t> FrameStarts(int64_t len, int hop) {
  std::vector<int64_t> starts;
  for (int64_t i = 0; i < len - kFrame; i += hop) starts.push_back(i);
  return starts;
}

// Drops frames of both signals whose reference energy lies more than the
// dynamic range below the loudest frame, then overlap-adds the survivors.
void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const int hop = kFrame / 2;
  const auto w = StoiWindow();
  const auto starts = FrameStarts(static_cast<int64_t>(x.size()), hop);
  std::vector<double> energy_db(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double e = 0;
    for (int n = 0; n < kFrame; ++n) {
      const double v = w[n] * x[starts[f] + n];
      e += v * v;
    }
    energy_db[f] = 20 * std::log10(std::sqrt(e) + kEps);
  }
  const double peak = starts.empty()
                          ? 0.0
                          : *std::max_element(energy_db.begin(), energy_db.end());
  std::vector<int64_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (energy_db[f] > peak - kDynamicRangeDb) kept.push_back(starts[f]);
  }
  const int64_t out_len =
      kept.empty() ? 0 : static_cast<int64_t>(kept.size() - 1) * hop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const int64_t dst = static_cast<int64_t>(k) * hop;
    for (int n = 0; n < kFrame; ++n) {
      xo[dst + n] += w[n] * x[kept[k] + n];
      yo[dst + n] += w[n] * y[kept[k] + n];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

// Third-octave band envelopes, (kBands, frames).
at::Tensor BandEnvelopes(const std::vector<double>& s, const at::Tensor& bands) {
  const auto w = StoiWindow();
  const auto starts = FrameStarts(static_cast<int64_t>(s.size()), kFrame / 2);
  at::Tensor frames = at::zeros({static_cast<int64_t>(starts.size()), kFrame}, at::kDouble);
  auto acc = frames.accessor<double, 2>();
  for (std::size_t f = 0; f < starts.size(); ++f) {
    for (int n = 0; n < kFrame; ++n) acc[f][n] = w[n] * s[starts[f] + n];
  }
  at::Tensor power = at::fft_rfft(frames, kFft, -1).abs().pow(2);  // (frames, bins)
  return at::matmul(bands, power.transpose(0, 1)).sqrt();
}

}  // namespace

std::vector<std::vector<double>> ThirdOctaveBands() {
  const int bins = kFft / 2 + 1;
  std::vector<double> f(bins);
  for (int k = 0; k < bins; ++k) f[k] = static_cast<double>(k) * kRate / kFft;
  auto nearest = [&](double hz) {
    int best = 0;
    for (int k = 1; k < bins; ++k) {
      if (std::abs(f[k] - hz) < std::abs(f[best] - hz)) best = k;
    }
    return best;
  };
  std::vector<std::vector<double>> obm(kBands, std::vector<double>(bins, 0.0));
  for (int b = 0; b < kBands; ++b) {
    const int lo = nearest(kMinFreq * std::pow(2.0, (2.0 * b - 1) / 6));
    const int hi = nearest(kMinFreq * std::pow(2.0, (2.0 * b + 1) / 6));
    for (int k = lo; k < hi; ++k) obm[b][k] = 1.0;
  }
  return obm;
}

double Stoi(const std::vector<double>& ref, const std::vector<double>& est,
            int sample_rate) {
  if (ref.size() != est.size()) {
    throw std::invalid_argument("stoi: reference and estimate lengths differ");
  }
  if (std::all_of(ref.begin(), ref.end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("stoi: reference is silent");
  }
  std::vector<double> x = ref, y = est;
  if (sample_rate != kRate) {
    Resampler rs(sample_rate, kRate);
    x = rs.Apply(x);
    y = rs.Apply(y);
  }
  RemoveSilentFrames(x, y);

  const auto obm = ThirdOctaveBands();
  at::Tensor bands = at::empty({kBands, kFft / 2 + 1}, at::kDouble);
  for (int b = 0; b < kBands; ++b) {
    for (int k = 0; k < kFft / 2 + 1; ++k) bands[b][k] = obm[b][k];
  }
  at::Tensor xt = BandEnvelopes(x, bands);
  at::Tensor yt = BandEnvelopes(y, bands);
  const int64_t frames = xt.size(1);
  if (frames < kSegment) {
    throw std::invalid_argument("stoi: fewer than 30 active frames (need >= 384 ms of speech)");
  }
  // Every 30-frame window ending at m = 30 .. frames: (J, bands, 30).
  at::Tensor xs = xt.unfold(1, kSegment, 1).transpose(0, 1);
  at::Tensor ys = yt.unfold(1, kSegment, 1).transpose(0, 1);
  at::Tensor scale = xs.norm(2, -1, true) / (ys.norm(2, -1, true) + kEps);
  const double clip = std::pow(10.0, -kBetaDb / 20);
  at::Tensor yp = at::minimum(ys * scale, xs * (1 + clip));
  yp = yp - yp.mean(-1, true);
  at::Tensor xc = xs - xs.mean(-1, true);
  yp = yp / (yp.norm(2, -1, true) + kEps);
  xc = xc / (xc.norm(2, -1, true) + kEps);
  const double d = (yp * xc).sum().item<double>() /
                   static_cast<double>(xs.size(0) * xs.size(1));
  return std::clamp(d, 0.0, 1.0);
}

double Stoi(const Waveform& ref, const Waveform& est) {
  if (ref.sample_rate != est.sample_rate) {
    throw std::invalid_argument("stoi: sample rates differ");
  }
  return Stoi(std::vector<double>(ref.samples.begin(), ref.samples.end()),
              std::vector<double>(est.samples.begin(), est.samples.end()),
              ref.sample_rate);
}

}  // namespace dvae
