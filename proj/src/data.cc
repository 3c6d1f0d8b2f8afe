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

#include "dccrn_vae/data.h"

#include <ATen/ATen.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dvae {

namespace fs = std::filesystem;

double ActivePower(const std::vector<float>& samples, double threshold_db) {
  float peak = 0.0f;
  for (float s : samples) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0f) return 0.0;
  const double floor = peak * std::pow(10.0, threshold_db / 20.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (float s : samples) {
    if (std::abs(s) >= floor) {
      sum += static_cast<double>(s) * s;
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

MixResult MixAtSnr(const Waveform& clean, const Waveform& noise,
                   double snr_db) {
  if (clean.size() != noise.size()) {
    throw std::invalid_argument("mix_at_snr: clean and noise lengths differ");
  }
  if (!std::isfinite(snr_db)) throw std::invalid_argument("mix_at_snr: snr must be finite");
  const double px = ActivePower(clean.samples);
  const double pd = ActivePower(noise.samples);
  if (px <= 0.0) throw std::invalid_argument("mix_at_snr: clean input is silent");
  if (pd <= 0.0) throw std::invalid_argument("mix_at_snr: noise input is silent");

  MixResult r;
  r.gain = std::sqrt(px / (pd * std::pow(10.0, snr_db / 10.0)));
  const std::size_t n = clean.size();
  r.clean = clean;
  r.noise_scaled.sample_rate = r.noisy.sample_rate = clean.sample_rate;
  r.noise_scaled.samples.resize(n);
  r.noisy.samples.resize(n);
  float peak = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    float ds = static_cast<float>(r.gain * noise.samples[i]);
    r.noise_scaled.samples[i] = ds;
    r.noisy.samples[i] = clean.samples[i] + ds;
    peak = std::max(peak, std::abs(r.noisy.samples[i]));
  }
  if (peak > kMixPeakLimit) {
    r.rescale = kMixPeakLimit / peak;
    const auto s = static_cast<float>(r.rescale);
    for (std::size_t i = 0; i < n; ++i) {
      r.clean.samples[i] *= s;
      r.noise_scaled.samples[i] *= s;
      r.noisy.samples[i] *= s;
    }
  }
  return r;
}

namespace {

void PeakNormalize(std::vector<float>& x, double target) {
  float peak = 0.0f;
  for (float s : x) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0f) return;
  const auto g = static_cast<float>(target / peak);
  for (float& s : x) s *= g;
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Waveform GenSyntheticSpeech(uint64_t seed, double duration_s, int sample_rate) {
  if (duration_s < 0.5) {
    throw std::invalid_argument("synthetic speech needs duration >= 0.5 s");
  }
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const double fs = sample_rate;
  const double nyquist_limit = std::min(7000.0, 0.45 * fs);

  // Syllable timeline: one raised-cosine amplitude cycle per syllable at a
  // rate near `rate`; about one syllable in five is silent, never two in a
  // row.
  const double rate = Uniform(rng, 2.5, 5.5);
  struct Syllable {
    std::size_t start, len;
    bool voiced;
    double f1, f2, f3;
  };
  std::vector<Syllable> syllables;
  std::size_t pos = 0;
  bool prev_silent = true;  // the first syllable is voiced
  bool any_silent = false;
  while (pos < n) {
    double dur = Uniform(rng, 0.9, 1.1) / rate;
    auto len = static_cast<std::size_t>(dur * fs);
    bool voiced = prev_silent || Uniform(rng, 0.0, 1.0) > 0.2;
    syllables.push_back({pos, len, voiced, Uniform(rng, 300, 800),
                         Uniform(rng, 900, 2200), Uniform(rng, 2400, 3000)});
    prev_silent = !voiced;
    any_silent |= !voiced;
    pos += len;
  }
  if (!any_silent && syllables.size() > 2) syllables[syllables.size() / 2].voiced = false;

  const double f0_start = Uniform(rng, 110.0, 250.0);
  const double drift_rate = Uniform(rng, 0.2, 0.8);
  const double drift_depth = Uniform(rng, 0.1, 0.25);
  const double drift_phase = Uniform(rng, 0.0, 2 * std::numbers::pi);

  std::vector<float> out(n, 0.0f);
  std::vector<double> phases(64, 0.0);
  for (std::size_t si = 0; si < syllables.size(); ++si) {
    const Syllable& syl = syllables[si];
    const Syllable& next = syllables[std::min(si + 1, syllables.size() - 1)];
    for (std::size_t k = 0; k < syl.len && syl.start + k < n; ++k) {
      const std::size_t i = syl.start + k;
      const double t = i / fs;
      const double u = static_cast<double>(k) / syl.len;
      double f0 = f0_start * (1.0 + drift_depth * std::sin(2 * std::numbers::pi *
                                                         drift_rate * t + drift_phase));
      f0 = std::clamp(f0, 100.0, 300.0);
      const int harmonics = std::min<int>(64, static_cast<int>(nyquist_limit / f0));
      // Phases advance even when silent so voicing resumes continuously.
      for (int h = 0; h < harmonics; ++h) {
        phases[h] += 2 * std::numbers::pi * (h + 1) * f0 / fs;
        if (phases[h] > 2 * std::numbers::pi) phases[h] -= 2 * std::numbers::pi;
      }
      if (!syl.voiced) continue;
      const double env = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * u);
      // Formants glide toward the next syllable's targets.
      const double g = u * u;
      const double f1 = syl.f1 + g * (next.f1 - syl.f1);
      const double f2 = syl.f2 + g * (next.f2 - syl.f2);
      const double f3 = syl.f3 + g * (next.f3 - syl.f3);
      double s = 0.0;
      for (int h = 0; h < harmonics; ++h) {
        const double f = (h + 1) * f0;
        auto res = [f](double fc, double bw) {
          const double d = (f - fc) / bw;
          return 1.0 / (1.0 + d * d);
        };
        const double weight = (0.05 + res(f1, 90) + 0.7 * res(f2, 130) +
                               0.4 * res(f3, 180)) /
                              (h + 1);
        s += weight * std::sin(phases[h]);
      }
      out[i] = static_cast<float>(env * s);
    }
  }
  PeakNormalize(out, 0.5);
  return {std::move(out), sample_rate};
}

std::string NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kModulated: return "modulated";
  }
  return "white";
}

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "pink") return NoiseKind::kPink;
  if (name == "modulated") return NoiseKind::kModulated;
  throw std::invalid_argument("unknown noise kind: " + name);
}

Waveform GenSyntheticNoise(NoiseKind kind, uint64_t seed, double duration_s,
                           int sample_rate) {
  if (duration_s <= 0) throw std::invalid_argument("noise duration must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> white(n);
  for (double& v : white) v = normal(rng);
  std::vector<float> out(n);

  if (kind == NoiseKind::kPink) {
    // Shape the spectrum by 1/sqrt(f): -3 dB per octave in power.
    at::Tensor x = at::tensor(white, at::TensorOptions().dtype(at::kDouble));
    at::Tensor spec = at::fft_rfft(x);
    const int64_t bins = spec.size(0);
    at::Tensor k = at::arange(bins, at::TensorOptions().dtype(at::kDouble));
    at::Tensor gain = at::rsqrt(k.clamp_min(1.0));
    gain.index_put_({0}, 0.0);
    at::Tensor shaped = at::fft_irfft(spec * gain, static_cast<int64_t>(n));
    auto acc = shaped.contiguous();
    const double* p = acc.data_ptr<double>();
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(p[i]);
  } else if (kind == NoiseKind::kModulated) {
    // Slow gain from three random sub-2 Hz sinusoids, mapped into [0.1, 1].
    double freq[3], phase[3];
    for (int j = 0; j < 3; ++j) {
      freq[j] = Uniform(rng, 0.2, 2.0);
      phase[j] = Uniform(rng, 0.0, 2 * std::numbers::pi);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      double m = 0.0;
      for (int j = 0; j < 3; ++j) m += std::sin(2 * std::numbers::pi * freq[j] * t + phase[j]);
      const double gain = 0.1 + 0.9 * (0.5 + m / 6.0);
      out[i] = static_cast<float>(gain * white[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(white[i]);
  }
  PeakNormalize(out, 0.5);
  return {std::move(out), sample_rate};
}

std::vector<MixRecord> MixManifest::Split(const std::string& split) const {
  std::vector<MixRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::string MixManifest::Resolve(const std::string& relative) const {
  fs::path p(relative);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

void WriteManifest(const MixManifest& manifest, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& r : manifest.records) {
    nlohmann::json j = {{"clean", r.clean},   {"noise", r.noise},
                        {"snr_db", r.snr_db}, {"split", r.split},
                        {"seed", r.seed},     {"sample_rate", manifest.sample_rate}};
    os << j.dump() << '\n';
  }
  if (!os) throw std::runtime_error("failed writing manifest: " + path);
}

MixManifest ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  MixManifest m;
  m.base_dir = fs::path(path).parent_path().string();
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      MixRecord r;
      r.clean = j.at("clean").get<std::string>();
      r.noise = j.at("noise").get<std::string>();
      r.snr_db = j.at("snr_db").get<double>();
      r.split = j.at("split").get<std::string>();
      r.seed = j.value("seed", uint64_t{0});
      m.sample_rate = j.value("sample_rate", m.sample_rate);
      if (!std::isfinite(r.snr_db)) throw std::invalid_argument("snr_db not finite");
      m.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest " + path + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

MixManifest BuildDataset(const DatasetConfig& config) {
  if (config.num_utterances < 1) {
    throw std::invalid_argument("dataset needs at least one utterance");
  }
  const fs::path root(config.out_dir);
  fs::create_directories(root / "clean");
  fs::create_directories(root / "noise");

  const int n = config.num_utterances;
  const int n_train = static_cast<int>(std::lround(n * config.train_fraction));
  const int n_valid = std::min(
      n - n_train, static_cast<int>(std::lround(n * config.valid_fraction)));

  std::mt19937_64 rng(config.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> split(n);
  for (int k = 0; k < n; ++k) {
    split[order[k]] = k < n_train ? "train" : (k < n_train + n_valid ? "valid" : "test");
  }

  MixManifest m;
  m.sample_rate = config.sample_rate;
  m.base_dir = root.string();
  std::uniform_real_distribution<double> snr(config.snr_min_db, config.snr_max_db);
  const NoiseKind kinds[] = {NoiseKind::kWhite, NoiseKind::kPink,
                             NoiseKind::kModulated};
  for (int i = 0; i < n; ++i) {
    MixRecord r;
    r.seed = rng();
    r.snr_db = snr(rng);
    r.split = split[i];
    char name[64];
    std::snprintf(name, sizeof(name), "utt_%05d.wav", i);
    r.clean = (fs::path("clean") / name).string();
    std::snprintf(name, sizeof(name), "noise_%05d.wav", i);
    r.noise = (fs::path("noise") / name).string();
    SaveWav(GenSyntheticSpeech(r.seed, config.duration_s, config.sample_rate),
            m.Resolve(r.clean));
    SaveWav(GenSyntheticNoise(kinds[i % 3], r.seed ^ 0x9E3779B97F4A7C15ull,
                              config.duration_s, config.sample_rate),
            m.Resolve(r.noise));
    m.records.push_back(std::move(r));
  }
  WriteManifest(m, (root / "manifest.jsonl").string());
  return m;
}

}  // namespace dvae
