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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dccrn_vae/data.h"
#include "test_util.h"

namespace {

dvae::Waveform Constant(std::vector<float> v) { return {std::move(v), 16000}; }

double MeanSquare(const std::vector<float>& v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  return s / v.size();
}

// Power spectral density averaged over [lo, hi) Hz.
double BandDensity(const at::Tensor& psd, double bin_hz, double lo, double hi) {
  const auto a = static_cast<int64_t>(std::ceil(lo / bin_hz));
  const auto b = static_cast<int64_t>(std::ceil(hi / bin_hz));
  return psd.narrow(0, a, b - a).mean().item<double>();
}

at::Tensor Psd(const dvae::Waveform& w) {
  at::Tensor x = at::tensor(w.samples, at::kFloat).to(at::kDouble);
  return at::fft_rfft(x).abs().pow(2);
}

std::string ReadAll(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mixing gain examples") {
  // Unit power, alternating sign.
  auto x = Constant({1, -1, 1, -1}), d = Constant({-1, 1, 1, -1});
  CHECK(dvae::MixAtSnr(x, d, 0.0).gain == doctest::Approx(1.0).epsilon(1e-15));
  // P_x = 4, P_d = 1 at 10 dB.
  auto x2 = Constant({0.2f, -0.2f, 0.2f, -0.2f}), d2 = Constant({0.1f, 0.1f, -0.1f, -0.1f});
  auto m = dvae::MixAtSnr(x2, d2, 10.0);
  CHECK(m.gain == doctest::Approx(std::sqrt(4.0 / 10.0)).epsilon(1e-6));
  CHECK(m.rescale == 1.0);

  // Peak rescale keeps all three consistent.
  auto loud = dvae::MixAtSnr(x, d, 0.0);
  CHECK(loud.rescale == doctest::Approx(0.99 / 2.0));
  double peak = 0;
  for (float v : loud.noisy.samples) peak = std::max(peak, double(std::abs(v)));
  CHECK(peak == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(loud.clean.samples[0] == doctest::Approx(0.495));
}

TEST_CASE("realized SNR and exact recombination") {
  auto x = dvae::GenSyntheticSpeech(1, 2.0), d = dvae::GenSyntheticNoise(dvae::NoiseKind::kPink, 2, 2.0);
  for (double snr : {-10.0, -3.3, 0.0, 7.5, 15.0}) {
    auto m = dvae::MixAtSnr(x, d, snr);
    const double realized = 10 * std::log10(dvae::ActivePower(m.clean.samples) /
                                            dvae::ActivePower(m.noise_scaled.samples));
    CHECK(std::abs(realized - snr) < 0.01);
    if (m.rescale == 1.0) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const float back = m.noisy.samples[i] - m.noise_scaled.samples[i];
        const float scale = std::max(std::abs(m.noisy.samples[i]), std::abs(x.samples[i]));
        CHECK(std::abs(back - x.samples[i]) <= std::numeric_limits<float>::epsilon() * scale);
      }
    }
  }
  auto hi = dvae::MixAtSnr(x, d, 60.0);
  double err = 0, ref = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = hi.clean.samples[i];
    err += (hi.noisy.samples[i] - c) * (hi.noisy.samples[i] - c);
    ref += c * c;
  }
  // Plain energy ratio; pauses in the speech make it a little worse than
  // the 60 dB active-power ratio.
  CHECK(std::sqrt(err) <= 2e-3 * std::sqrt(ref));
}

TEST_CASE("active power skips near-silent samples") {
  std::vector<float> v(1000, 0.0f);
  for (int i = 0; i < 100; ++i) v[i] = (i % 2 ? 0.5f : -0.5f);
  v[500] = 1e-4f;  // 80 dB below the peak
  CHECK(dvae::ActivePower(v) == doctest::Approx(0.25));
  CHECK(dvae::ActivePower(std::vector<float>(10, 0.0f)) == 0.0);
}

TEST_CASE("mixing errors") {
  auto x = Constant({1, -1, 1, -1});
  CHECK_THROWS_WITH(dvae::MixAtSnr(x, Constant({1, 1, 1}), 0), doctest::Contains("lengths differ"));
  CHECK_THROWS_WITH(dvae::MixAtSnr(Constant({0, 0, 0, 0}), x, 0), doctest::Contains("clean input is silent"));
  CHECK_THROWS_WITH(dvae::MixAtSnr(x, Constant({0, 0, 0, 0}), 0), doctest::Contains("noise input is silent"));
  CHECK_THROWS_AS(dvae::MixAtSnr(x, x, NAN), std::invalid_argument);
}

TEST_CASE("synthetic speech is band limited and syllabic") {
  auto a = dvae::GenSyntheticSpeech(7, 8.0), b = dvae::GenSyntheticSpeech(7, 8.0);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != dvae::GenSyntheticSpeech(8, 8.0).samples);
  CHECK(a.size() == 128000);
  double peak = 0;
  for (float v : a.samples) peak = std::max(peak, double(std::abs(v)));
  CHECK(peak == doctest::Approx(0.5).epsilon(1e-6));

  at::Tensor psd = Psd(a);
  const double bin_hz = 16000.0 / 128000;
  const auto cut = static_cast<int64_t>(4000 / bin_hz);
  CHECK(psd.narrow(0, 0, cut).sum().item<double>() / psd.sum().item<double>() >= 0.8);

  // 10 ms RMS envelope, then its spectrum.
  std::vector<double> env;
  for (std::size_t i = 0; i + 160 <= a.size(); i += 160) {
    double s = 0;
    for (std::size_t j = i; j < i + 160; ++j) s += double(a.samples[j]) * a.samples[j];
    env.push_back(std::sqrt(s / 160));
  }
  at::Tensor e = at::tensor(env, at::kDouble);
  at::Tensor mod = at::fft_rfft(e - e.mean()).abs();
  const double mod_bin = 100.0 / env.size();
  const auto lo = static_cast<int64_t>(std::ceil(0.5 / mod_bin));
  const int64_t k = mod.narrow(0, lo, mod.size(0) - lo).argmax().item<int64_t>() + lo;
  CHECK(k * mod_bin >= 2.0);
  CHECK(k * mod_bin <= 6.0);
  CHECK_THROWS_AS(dvae::GenSyntheticSpeech(1, 0.4), std::invalid_argument);
}

TEST_CASE("white noise has flat octaves") {
  auto w = dvae::GenSyntheticNoise(dvae::NoiseKind::kWhite, 3, 10.0);
  CHECK(w.samples == dvae::GenSyntheticNoise(dvae::NoiseKind::kWhite, 3, 10.0).samples);
  at::Tensor psd = Psd(w);
  const double bin_hz = 0.1;
  std::vector<double> db;
  for (double f = 125; f < 8000; f *= 2) db.push_back(10 * std::log10(BandDensity(psd, bin_hz, f, f * 2 > 8000 ? 8000 : f * 2)));
  const double mean = std::accumulate(db.begin(), db.end(), 0.0) / db.size();
  for (double v : db) CHECK(std::abs(v - mean) < 1.0);
}

TEST_CASE("pink noise falls 3 dB per octave") {
  auto p = dvae::GenSyntheticNoise(dvae::NoiseKind::kPink, 4, 10.0);
  at::Tensor psd = Psd(p);
  std::vector<double> db;
  for (int k = 0; k < 6; ++k) {
    const double lo = 93.75 * std::pow(2.0, k);
    db.push_back(10 * std::log10(BandDensity(psd, 0.1, lo, 2 * lo)));
  }
  for (std::size_t k = 1; k < db.size(); ++k) {
    CHECK(std::abs(db[k] - db[k - 1] + 3.0103) < 1.0);
  }
}

TEST_CASE("modulated noise has a slow envelope") {
  auto m = dvae::GenSyntheticNoise(dvae::NoiseKind::kModulated, 5, 4.0);
  CHECK(m.samples == dvae::GenSyntheticNoise(dvae::NoiseKind::kModulated, 5, 4.0).samples);
  std::vector<double> rms;
  for (int s = 0; s < 4; ++s) {
    std::vector<float> seg(m.samples.begin() + s * 16000, m.samples.begin() + (s + 1) * 16000);
    rms.push_back(std::sqrt(MeanSquare(seg)));
  }
  CHECK(*std::max_element(rms.begin(), rms.end()) / *std::min_element(rms.begin(), rms.end()) > 1.2);
  CHECK(dvae::ParseNoiseKind(dvae::NoiseKindName(dvae::NoiseKind::kModulated)) == dvae::NoiseKind::kModulated);
  CHECK_THROWS_AS(dvae::ParseNoiseKind("brown"), std::invalid_argument);
}

TEST_CASE("dataset splits, SNR range and idempotence") {
  const auto dir = dvae::testing::ScratchDir("dataset");
  dvae::DatasetConfig cfg;
  cfg.out_dir = dir + "/a";
  cfg.duration_s = 0.5;
  auto m = dvae::BuildDataset(cfg);
  CHECK(m.records.size() == 100);
  CHECK(m.Split("train").size() == 70);
  CHECK(m.Split("valid").size() == 20);
  CHECK(m.Split("test").size() == 10);
  std::map<std::string, std::string> owner;
  for (const auto& r : m.records) {
    CHECK(r.snr_db >= -10.0);
    CHECK(r.snr_db <= 15.0);
    for (const auto& src : {r.clean, r.noise}) {
      CHECK(owner.emplace(src, r.split).second);
      CHECK(std::filesystem::exists(m.Resolve(src)));
    }
  }

  auto back = dvae::ReadManifest(cfg.out_dir + "/manifest.jsonl");
  REQUIRE(back.records.size() == 100);
  CHECK(back.records[17].clean == m.records[17].clean);
  CHECK(back.records[17].snr_db == m.records[17].snr_db);
  CHECK(back.records[17].seed == m.records[17].seed);
  CHECK(back.sample_rate == 16000);

  cfg.out_dir = dir + "/b";
  dvae::BuildDataset(cfg);
  CHECK(ReadAll(dir + "/a/manifest.jsonl") == ReadAll(dir + "/b/manifest.jsonl"));
  CHECK(ReadAll(dir + "/a/clean/utt_00042.wav") == ReadAll(dir + "/b/clean/utt_00042.wav"));

  cfg.num_utterances = 0;
  CHECK_THROWS_AS(dvae::BuildDataset(cfg), std::invalid_argument);
  CHECK_THROWS_AS(dvae::ReadManifest(dir + "/missing.jsonl"), std::runtime_error);
  std::ofstream(dir + "/bad.jsonl") << "{\"clean\": 3}\n";
  CHECK_THROWS_AS(dvae::ReadManifest(dir + "/bad.jsonl"), std::runtime_error);
}
