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

#include <doctest.h>

#include <ATen/ATen.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "dccrn_vae/stft.h"
#include "test_util.h"

using dvae::ConvStft;
using dvae::StftConfig;

namespace {

double RelErr(const at::Tensor& a, const at::Tensor& b) {
  return ((a - b).norm() / b.norm()).item<double>();
}

}  // namespace

TEST_CASE("profiles validate and follow the frame arithmetic") {
  CHECK_NOTHROW(StftConfig::Paper().Validate());
  CHECK_NOTHROW(StftConfig::Desk().Validate());
  CHECK(StftConfig::Paper().num_bins() == 257);
  CHECK(StftConfig::Desk().num_bins() == 129);
  // Left pad of frame_len - hop plus right completion:
  // T = ceil((N + 2 (W - H) - W) / H) + 1.
  CHECK(dvae::NumFrames(32000, StftConfig::Paper()) == 323);
  CHECK(dvae::NumFrames(16000, StftConfig::Desk()) == 253);
  CHECK(dvae::NumFrames(400, StftConfig::Paper()) == 7);
  CHECK_THROWS_WITH(dvae::NumFrames(399, StftConfig::Paper()),
                    doctest::Contains("signal shorter than one frame"));
}

TEST_CASE("config validation rejects bad geometry and non-COLA windows") {
  StftConfig c = StftConfig::Desk();
  c.hop = 300;
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  c = StftConfig::Desk();
  c.frame_len = 512;
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  c = StftConfig{256, 256, 100, dvae::WindowKind::kSqrtHann};
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  c = StftConfig{256, 256, 128, dvae::WindowKind::kRectangular};
  CHECK_NOTHROW(c.Validate());
}

TEST_CASE("sqrt-Hann window is periodic and squares to a Hann") {
  at::Tensor w = dvae::MakeWindow(StftConfig::Paper());
  REQUIRE(w.size(0) == 400);
  CHECK(w[0].item<double>() == 0.0);
  for (int n : {1, 100, 200, 399}) {
    const double hann = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / 400);
    CHECK(w[n].item<double>() * w[n].item<double>() == doctest::Approx(hann).epsilon(1e-12));
  }
}

TEST_CASE("bin-centre cosine peaks at its bin in every interior frame") {
  for (StftConfig cfg : {StftConfig::Paper(), StftConfig::Desk()}) {
    for (int k : {5, 40, 101}) {
      at::Tensor n = at::arange(16000, at::kDouble);
      at::Tensor x = at::cos(2 * std::numbers::pi * k * n / cfg.fft_size);
      auto spec = ConvStft(cfg, at::kDouble).Analyze(x);
      CHECK(spec.num_bins() == cfg.num_bins());
      at::Tensor mag = (spec.real.pow(2) + spec.imag.pow(2)).sqrt();
      at::Tensor interior = mag.narrow(1, 4, mag.size(1) - 8);
      CHECK((interior.argmax(0) == k).all().item<bool>());
    }
  }
}

TEST_CASE("zero input gives a zero spectrogram and back") {
  ConvStft stft(StftConfig::Paper(), at::kDouble);
  auto spec = stft.Analyze(at::zeros({2000}, at::kDouble));
  CHECK(spec.real.abs().max().item<double>() == 0.0);
  CHECK(spec.imag.abs().max().item<double>() == 0.0);
  CHECK(stft.Synthesize(spec, 2000).abs().max().item<double>() == 0.0);
}

TEST_CASE("impulse at a frame centre has flat magnitude equal to the window value") {
  const StftConfig cfg = StftConfig::Paper();
  ConvStft stft(cfg, at::kDouble);
  const int t = 10, n0 = cfg.frame_len / 2;
  // Frame t starts at t * hop in the left-padded signal.
  const int64_t idx = int64_t{t} * cfg.hop - cfg.pad() + n0;
  at::Tensor x = at::zeros({4000}, at::kDouble);
  x[idx] = 1.0;
  auto spec = stft.Analyze(x);
  at::Tensor mag = (spec.real.select(1, t).pow(2) + spec.imag.select(1, t).pow(2)).sqrt();
  const double wc = dvae::MakeWindow(cfg)[n0].item<double>();
  CHECK((mag - wc).abs().max().item<double>() < 1e-12);
}

TEST_CASE("one frame matches a direct DFT and Parseval") {
  const StftConfig cfg = StftConfig::Paper();
  at::Tensor x = at::randn({3000}, at::kDouble);
  auto spec = ConvStft(cfg, at::kDouble).Analyze(x);
  at::Tensor w = dvae::MakeWindow(cfg);
  const int t = 12;
  const int64_t start = int64_t{t} * cfg.hop - cfg.pad();
  std::vector<double> frame(cfg.fft_size, 0.0);
  for (int n = 0; n < cfg.frame_len; ++n) {
    frame[n] = w[n].item<double>() * x[start + n].item<double>();
  }
  double max_err = 0, energy_time = 0, energy_freq = 0;
  for (double v : frame) energy_time += v * v;
  for (int k = 0; k < cfg.num_bins(); ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < cfg.fft_size; ++n) {
      acc += frame[n] * std::polar(1.0, -2 * std::numbers::pi * k * n / cfg.fft_size);
    }
    const std::complex<double> got(spec.real[k][t].item<double>(), spec.imag[k][t].item<double>());
    max_err = std::max(max_err, std::abs(got - acc));
    const double weight = (k == 0 || k == cfg.fft_size / 2) ? 1.0 : 2.0;
    energy_freq += weight * std::norm(got);
  }
  CHECK(max_err < 1e-10);
  CHECK(energy_freq / cfg.fft_size == doctest::Approx(energy_time).epsilon(1e-12));
}

TEST_CASE("perfect reconstruction in 64-bit for assorted lengths") {
  for (StftConfig cfg : {StftConfig::Paper(), StftConfig::Desk()}) {
    ConvStft stft(cfg, at::kDouble);
    for (int64_t n : {int64_t(cfg.frame_len), int64_t(1001), int64_t(16000), int64_t(16037)}) {
      at::Tensor x = at::randn({n}, at::kDouble);
      CHECK(RelErr(stft.Synthesize(stft.Analyze(x), n), x) < 1e-6);
    }
  }
}

TEST_CASE("perfect reconstruction in 32-bit and batched") {
  ConvStft stft(StftConfig::Paper(), at::kFloat);
  at::Tensor x = at::rand({3, 16000}) * 2 - 1;
  at::Tensor y = stft.Synthesize(stft.Analyze(x), 16000);
  CHECK(y.sizes() == x.sizes());
  CHECK(RelErr(y, x) < 1e-3);
}

TEST_CASE("linearity holds to machine precision") {
  ConvStft stft(StftConfig::Desk(), at::kDouble);
  at::Tensor x = at::randn({5000}, at::kDouble), y = at::randn({5000}, at::kDouble);
  const double a = -0.4, b = 2.5;
  auto s = stft.Analyze(a * x + b * y);
  auto sx = stft.Analyze(x), sy = stft.Analyze(y);
  CHECK(RelErr(s.real, a * sx.real + b * sy.real) < 1e-13);
  CHECK(RelErr(s.imag, a * sx.imag + b * sy.imag) < 1e-13);
}

TEST_CASE("synthesis pads or truncates to out_len and rejects mismatched configs") {
  ConvStft stft(StftConfig::Desk(), at::kDouble);
  at::Tensor x = at::randn({1000}, at::kDouble);
  auto spec = stft.Analyze(x);
  CHECK(stft.Synthesize(spec, 500).size(0) == 500);
  at::Tensor longer = stft.Synthesize(spec, 5000);
  CHECK(longer.size(0) == 5000);
  CHECK(longer.narrow(0, 2000, 3000).abs().max().item<double>() == 0.0);
  ConvStft other(StftConfig::Paper(), at::kDouble);
  CHECK_THROWS_WITH(other.Synthesize(spec, 1000), doctest::Contains("config mismatch"));
  CHECK_THROWS_WITH(stft.Analyze(at::randn({100}, at::kDouble)),
                    doctest::Contains("signal shorter than one frame"));
}

TEST_CASE("gradients flow through the convolutional front end") {
  ConvStft stft(StftConfig::Desk(), at::kDouble);
  at::Tensor x = at::randn({2000}, at::kDouble).requires_grad_();
  auto spec = stft.Analyze(x);
  (spec.real.pow(2).sum() + spec.imag.pow(2).sum()).backward();
  CHECK(x.grad().abs().sum().item<double>() > 0);
}

TEST_CASE("waveform wrappers and the debug dump round trip") {
  const auto dir = dvae::testing::ScratchDir("stft_dump");
  dvae::Waveform w;
  for (int i = 0; i < 3000; ++i) w.samples.push_back(std::sin(0.01f * i));
  auto spec = dvae::ConvStftForward(w, StftConfig::Desk());
  dvae::Waveform back = dvae::ConvIstftWaveform(spec, StftConfig::Desk(), w.size());
  REQUIRE(back.size() == w.size());
  double err = 0;
  for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, double(std::abs(back.samples[i] - w.samples[i])));
  CHECK(err < 1e-4);

  dvae::WriteSpectrogramDump(spec, dir + "/s.cspg");
  auto loaded = dvae::ReadSpectrogramDump(dir + "/s.cspg", StftConfig::Desk());
  CHECK(at::equal(loaded.real, spec.real.to(at::kFloat)));
  CHECK(at::equal(loaded.imag, spec.imag.to(at::kFloat)));
}
