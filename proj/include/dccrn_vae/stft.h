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

#ifndef DCCRN_VAE_STFT_H_
#define DCCRN_VAE_STFT_H_

#include <ATen/ATen.h>

#include <cstdint>
#include <string>

#include "dccrn_vae/wav.h"

namespace dvae {

enum class WindowKind { kSqrtHann, kHann, kRectangular };

struct StftConfig {
  int fft_size = 512;
  int frame_len = 400;
  int hop = 100;
  WindowKind window = WindowKind::kSqrtHann;

  // 16 kHz, 25 ms frames, 6.25 ms shift, 512-point DFT.
  static StftConfig Paper() { return {512, 400, 100, WindowKind::kSqrtHann}; }
  static StftConfig Desk() { return {256, 256, 64, WindowKind::kSqrtHann}; }

  int num_bins() const { return fft_size / 2 + 1; }
  // Zeros added before the first sample so that every input sample is
  // covered by the same number of frames.
  int pad() const { return frame_len - hop; }

  // Throws std::invalid_argument unless hop <= frame_len <= fft_size and the
  // squared window overlap-adds to a constant at this hop.
  void Validate() const;

  bool operator==(const StftConfig&) const = default;
};

// Analysis (and synthesis) window of length frame_len.
at::Tensor MakeWindow(const StftConfig& config,
                      at::ScalarType dtype = at::kDouble);

// Frames produced for a signal of `num_samples` samples.
int64_t NumFrames(int64_t num_samples, const StftConfig& config);

// Complex spectrogram, (F, T) or batched (B, F, T), F = fft_size / 2 + 1.
struct ComplexSpectrogram {
  at::Tensor real;
  at::Tensor imag;
  StftConfig config;

  int64_t num_bins() const { return real.size(-2); }
  int64_t num_frames() const { return real.size(-1); }
};

// Strided 1-D convolution with fixed windowed DFT-basis kernels, and the
// matching transposed convolution for overlap-add synthesis. Kernels are
// built once per (config, dtype) pair; the object is immutable afterwards.
class ConvStft {
 public:
  ConvStft(const StftConfig& config, at::ScalarType dtype);

  const StftConfig& config() const { return config_; }
  at::ScalarType dtype() const { return dtype_; }

  // samples: (N) or (B, N) real. Differentiable.
  ComplexSpectrogram Analyze(const at::Tensor& samples) const;
  // Returns (out_len) or (B, out_len). Differentiable.
  at::Tensor Synthesize(const ComplexSpectrogram& spec, int64_t out_len) const;

 private:
  StftConfig config_;
  at::ScalarType dtype_;
  at::Tensor analysis_kernel_;   // (2F, 1, frame_len)
  at::Tensor synthesis_kernel_;  // (2F, 1, frame_len)
  at::Tensor window_sq_;         // (1, 1, frame_len)
};

// Convenience wrappers that build the kernels on each call.
ComplexSpectrogram ConvStftForward(const at::Tensor& samples,
                                   const StftConfig& config);
ComplexSpectrogram ConvStftForward(const Waveform& wave,
                                   const StftConfig& config);
at::Tensor ConvIstft(const ComplexSpectrogram& spec, const StftConfig& config,
                     int64_t out_len);
Waveform ConvIstftWaveform(const ComplexSpectrogram& spec,
                           const StftConfig& config, int64_t out_len,
                           int sample_rate = 16000);

// Debug dump: 16-byte header (magic "CSPG", uint32 F, uint32 T, uint32
// flags) followed by float32 (real, imag) pairs, row-major F x T.
void WriteSpectrogramDump(const ComplexSpectrogram& spec,
                          const std::string& path);
ComplexSpectrogram ReadSpectrogramDump(const std::string& path,
                                       const StftConfig& config);

at::Tensor ToTensor(const Waveform& wave, at::ScalarType dtype = at::kFloat);
Waveform ToWaveform(const at::Tensor& samples, int sample_rate);

}  // namespace dvae

#endif  // DCCRN_VAE_STFT_H_
