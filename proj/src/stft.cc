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

#include "dccrn_vae/stft.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dvae {

namespace {

constexpr char kDumpMagic[4] = {'C', 'S', 'P', 'G'};
constexpr uint32_t kDumpFlagFloat32 = 1;

std::vector<double> WindowValues(const StftConfig& config) {
  const int n = config.frame_len;
  std::vector<double> w(n, 1.0);
  if (config.window == WindowKind::kRectangular) return w;
  for (int i = 0; i < n; ++i) {
    // Periodic Hann.
    double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    w[i] = config.window == WindowKind::kSqrtHann ? std::sqrt(hann) : hann;
  }
  return w;
}

}  // namespace

void StftConfig::Validate() const {
  if (hop <= 0 || frame_len <= 0 || fft_size <= 0) {
    throw std::invalid_argument("stft sizes must be positive");
  }
  if (hop > frame_len || frame_len > fft_size) {
    throw std::invalid_argument("stft config requires hop <= frame_len <= fft_size");
  }
  if (fft_size % 2 != 0) {
    throw std::invalid_argument("stft fft_size must be even");
  }
  // Squared window summed over all frame shifts must not vary with the
  // sample position.
  std::vector<double> w = WindowValues(*this);
  double lo = 1e300, hi = -1e300;
  for (int n = 0; n < hop; ++n) {
    double s = 0.0;
    for (int m = n; m < frame_len; m += hop) s += w[m] * w[m];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (lo <= 0.0 || (hi - lo) > 1e-9 * hi) {
    throw std::invalid_argument(
        "stft window does not satisfy constant overlap-add at this hop");
  }
}

at::Tensor MakeWindow(const StftConfig& config, at::ScalarType dtype) {
  std::vector<double> w = WindowValues(config);
  return at::tensor(w, at::TensorOptions().dtype(at::kDouble)).to(dtype);
}

int64_t NumFrames(int64_t num_samples, const StftConfig& config) {
  if (num_samples < config.frame_len) {
    throw std::invalid_argument("signal shorter than one frame (" +
                                std::to_string(num_samples) + " < " +
                                std::to_string(config.frame_len) + ")");
  }
  int64_t span = num_samples + 2 * config.pad() - config.frame_len;
  return (span + config.hop - 1) / config.hop + 1;
}

ConvStft::ConvStft(const StftConfig& config, at::ScalarType dtype)
    : config_(config), dtype_(dtype) {
  config_.Validate();
  const int n_fft = config.fft_size;
  const int len = config.frame_len;
  const int bins = config.num_bins();
  std::vector<double> w = WindowValues(config);
  std::vector<double> analysis(2 * bins * len), synthesis(2 * bins * len);
  for (int k = 0; k < bins; ++k) {
    double scale = (k == 0 || 2 * k == n_fft) ? 1.0 / n_fft : 2.0 / n_fft;
    for (int n = 0; n < len; ++n) {
      // Reduce k*n mod n_fft before the trig call to keep the phase exact.
      double phase = 2.0 * std::numbers::pi *
                     static_cast<double>((static_cast<int64_t>(k) * n) % n_fft) /
                     n_fft;
      double c = std::cos(phase), s = std::sin(phase);
      analysis[k * len + n] = w[n] * c;
      analysis[(bins + k) * len + n] = -w[n] * s;
      synthesis[k * len + n] = scale * c * w[n];
      synthesis[(bins + k) * len + n] = -scale * s * w[n];
    }
  }
  auto opts = at::TensorOptions().dtype(at::kDouble);
  analysis_kernel_ =
      at::tensor(analysis, opts).reshape({2 * bins, 1, len}).to(dtype);
  synthesis_kernel_ =
      at::tensor(synthesis, opts).reshape({2 * bins, 1, len}).to(dtype);
  std::vector<double> w2(len);
  for (int n = 0; n < len; ++n) w2[n] = w[n] * w[n];
  window_sq_ = at::tensor(w2, opts).reshape({1, 1, len}).to(dtype);
}

ComplexSpectrogram ConvStft::Analyze(const at::Tensor& samples) const {
  const bool batched = samples.dim() == 2;
  if (samples.dim() != 1 && !batched) {
    throw std::invalid_argument("conv_stft expects (N) or (B, N) samples");
  }
  at::Tensor x = batched ? samples : samples.unsqueeze(0);
  x = x.to(dtype_);
  const int64_t n = x.size(1);
  const int64_t frames = NumFrames(n, config_);
  const int64_t padded = (frames - 1) * config_.hop + config_.frame_len;
  const int64_t right = padded - n - config_.pad();
  x = at::constant_pad_nd(x.unsqueeze(1), {config_.pad(), right});
  at::Tensor out = at::conv1d(x, analysis_kernel_, {}, config_.hop);
  const int64_t bins = config_.num_bins();
  ComplexSpectrogram spec{out.narrow(1, 0, bins), out.narrow(1, bins, bins),
                          config_};
  if (!batched) {
    spec.real = spec.real.squeeze(0);
    spec.imag = spec.imag.squeeze(0);
  }
  return spec;
}

at::Tensor ConvStft::Synthesize(const ComplexSpectrogram& spec,
                                int64_t out_len) const {
  if (!(spec.config == config_)) {
    throw std::invalid_argument("conv_istft: spectrogram config mismatch");
  }
  const int64_t bins = config_.num_bins();
  if (spec.real.size(-2) != bins || !spec.real.sizes().equals(spec.imag.sizes())) {
    throw std::invalid_argument("conv_istft: spectrogram has " +
                                std::to_string(spec.real.size(-2)) +
                                " bins, expected " + std::to_string(bins));
  }
  const bool batched = spec.real.dim() == 3;
  at::Tensor re = batched ? spec.real : spec.real.unsqueeze(0);
  at::Tensor im = batched ? spec.imag : spec.imag.unsqueeze(0);
  at::Tensor packed = at::cat({re, im}, 1).to(dtype_);
  const int64_t frames = packed.size(2);
  at::Tensor y = at::conv_transpose1d(packed, synthesis_kernel_, {},
                                      config_.hop);
  at::Tensor env = at::conv_transpose1d(
      at::ones({1, 1, frames}, packed.options()), window_sq_, {}, config_.hop);
  // The envelope is strictly positive over the unpadded region; the padded
  // margins are discarded below.
  y = (y / env.clamp_min(1e-12)).squeeze(1);
  const int64_t avail = y.size(1) - config_.pad();
  const int64_t take = std::min(avail, out_len);
  y = y.narrow(1, config_.pad(), take);
  if (take < out_len) y = at::constant_pad_nd(y, {0, out_len - take});
  return batched ? y : y.squeeze(0);
}

ComplexSpectrogram ConvStftForward(const at::Tensor& samples,
                                   const StftConfig& config) {
  return ConvStft(config, samples.scalar_type()).Analyze(samples);
}

ComplexSpectrogram ConvStftForward(const Waveform& wave,
                                   const StftConfig& config) {
  ValidateWaveform(wave);
  return ConvStftForward(ToTensor(wave), config);
}

at::Tensor ConvIstft(const ComplexSpectrogram& spec, const StftConfig& config,
                     int64_t out_len) {
  return ConvStft(config, spec.real.scalar_type()).Synthesize(spec, out_len);
}

Waveform ConvIstftWaveform(const ComplexSpectrogram& spec,
                           const StftConfig& config, int64_t out_len,
                           int sample_rate) {
  return ToWaveform(ConvIstft(spec, config, out_len), sample_rate);
}

void WriteSpectrogramDump(const ComplexSpectrogram& spec,
                          const std::string& path) {
  if (spec.real.dim() != 2) {
    throw std::invalid_argument("spectrogram dump expects an unbatched (F, T) spectrogram");
  }
  at::Tensor re = spec.real.detach().to(at::kFloat).contiguous();
  at::Tensor im = spec.imag.detach().to(at::kFloat).contiguous();
  at::Tensor packed = at::stack({re, im}, -1).contiguous();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write spectrogram dump: " + path);
  uint32_t header[3] = {static_cast<uint32_t>(re.size(0)),
                        static_cast<uint32_t>(re.size(1)), kDumpFlagFloat32};
  os.write(kDumpMagic, 4);
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(packed.data_ptr<float>()),
           packed.numel() * sizeof(float));
  if (!os) throw std::runtime_error("failed writing spectrogram dump: " + path);
}

ComplexSpectrogram ReadSpectrogramDump(const std::string& path,
                                       const StftConfig& config) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open spectrogram dump: " + path);
  char magic[4];
  uint32_t header[3];
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is || std::memcmp(magic, kDumpMagic, 4) != 0) {
    throw std::runtime_error("not a spectrogram dump: " + path);
  }
  if (header[2] != kDumpFlagFloat32) {
    throw std::runtime_error("unsupported spectrogram dump flags");
  }
  at::Tensor packed = at::empty({header[0], header[1], 2}, at::kFloat);
  is.read(reinterpret_cast<char*>(packed.data_ptr<float>()),
          packed.numel() * sizeof(float));
  if (!is) throw std::runtime_error("truncated spectrogram dump: " + path);
  return {packed.select(2, 0).contiguous(), packed.select(2, 1).contiguous(),
          config};
}

at::Tensor ToTensor(const Waveform& wave, at::ScalarType dtype) {
  return at::tensor(wave.samples, at::TensorOptions().dtype(at::kFloat))
      .to(dtype);
}

Waveform ToWaveform(const at::Tensor& samples, int sample_rate) {
  at::Tensor s = samples.detach().to(at::kFloat).contiguous().reshape({-1});
  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.samples.assign(s.data_ptr<float>(), s.data_ptr<float>() + s.numel());
  return wave;
}

}  // namespace dvae
