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

#ifndef DCCRN_VAE_MODELS_H_
#define DCCRN_VAE_MODELS_H_

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dccrn_vae/complex_gaussian.h"
#include "dccrn_vae/complex_nn.h"
#include "dccrn_vae/stft.h"

namespace dvae {

enum class Profile { kPaper, kDesk };

std::string ProfileName(Profile p);
Profile ParseProfile(const std::string& name);

struct ModelConfig {
  Profile profile = Profile::kDesk;
  StftConfig stft = StftConfig::Desk();
  std::vector<int64_t> channels = {8, 16, 16, 32, 32, 32};
  std::array<int64_t, 2> kernel = {5, 2};
  std::array<int64_t, 2> stride = {2, 1};
  int64_t lstm_units = 32;
  int64_t latent_dim = 16;

  static ModelConfig Paper();
  static ModelConfig Desk();
  static ModelConfig ForProfile(Profile p);

  int64_t levels() const { return static_cast<int64_t>(channels.size()); }
  // Encoder input height: the DC bin is dropped so this is fft_size / 2.
  int64_t freq_bins() const { return stft.fft_size / 2; }
  int64_t bottleneck_freq() const;
  int64_t bottleneck_features() const {
    return channels.back() * bottleneck_freq();
  }

  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Per-level encoder outputs, shallowest first.
using SkipFeatureStack = std::vector<ComplexTensor>;

struct EncoderOutput {
  CGDParams posterior;     // (B, L, T)
  SkipFeatureStack skips;  // one (B, C_l, F_l, T) map per level
};

// Spectrogram (B, F+1, T) -> (B, 1, F, T) with the DC row removed, and back.
ComplexTensor SpectrogramToFeatures(const ComplexSpectrogram& spec,
                                    const ModelConfig& config);
ComplexSpectrogram FeaturesToSpectrogram(const ComplexTensor& features,
                                         const ModelConfig& config);

// Conv + complex BN + PReLU.
class EncoderLevelImpl : public torch::nn::Module {
 public:
  EncoderLevelImpl(int64_t in_channels, int64_t out_channels,
                   const ModelConfig& config);
  ComplexTensor forward(const ComplexTensor& x);

  ComplexConv2d conv{nullptr};
  ComplexBatchNorm norm{nullptr};
  ComplexPReLU act{nullptr};
};
TORCH_MODULE(EncoderLevel);

class ConvStackImpl : public torch::nn::Module {
 public:
  explicit ConvStackImpl(const ModelConfig& config);
  SkipFeatureStack forward(const ComplexTensor& x);

 private:
  std::vector<EncoderLevel> levels_;
};
TORCH_MODULE(ConvStack);

// Complex encoder stack, complex LSTM and three latent heads (mean,
// covariance, pseudo-covariance). Used for the clean, noise and noisy
// encoders with disjoint parameters.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const ModelConfig& config);
  EncoderOutput forward(const ComplexSpectrogram& spec);

  const ModelConfig& config() const { return config_; }

  ConvStack stack{nullptr};
  ComplexLstm lstm{nullptr};
  ComplexLinear mu_head{nullptr};
  ComplexLinear sigma_head{nullptr};
  ComplexLinear delta_head{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(Encoder);

// Projects z onto the bottleneck shape, then runs transposed-conv levels
// that each consume the matching skip by channel concatenation. Produces a
// full complex spectrum (direct synthesis).
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const ModelConfig& config);
  ComplexSpectrogram forward(const LatentSample& z,
                             const SkipFeatureStack& skips);

  ComplexLinear project{nullptr};

 private:
  ModelConfig config_;
  std::vector<ComplexConvTranspose2d> convs_;
  std::vector<ComplexBatchNorm> norms_;
  std::vector<ComplexPReLU> acts_;
};
TORCH_MODULE(Decoder);

class VaeImpl : public torch::nn::Module {
 public:
  explicit VaeImpl(const ModelConfig& config);

  Encoder encoder{nullptr};
  Decoder decoder{nullptr};
};
TORCH_MODULE(Vae);

// Complex conv stack followed by a one-unit real LSTM over the concatenated
// (re, im) bottleneck features; the score is the time average of the unit's
// output, left unsquashed for the least-squares objective.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const ModelConfig& config);
  at::Tensor forward(const ComplexSpectrogram& spec);  // (B)

  ConvStack stack{nullptr};
  RealLstm lstm{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(Discriminator);

// Parameter groups, by name prefix, used for freezing and bookkeeping.
inline constexpr const char* kCleanEncoder = "cvae.encoder";
inline constexpr const char* kCleanDecoder = "cvae.decoder";
inline constexpr const char* kNoiseEncoder = "nvae.encoder";
inline constexpr const char* kNoiseDecoder = "nvae.decoder";
inline constexpr const char* kNoisyEncoder = "nsvae";
inline constexpr const char* kDiscriminator = "disc";

const std::vector<std::string>& ParameterGroups();

// C-VAE, N-VAE, NS-VAE encoder and discriminator.
class DccrnVaeImpl : public torch::nn::Module {
 public:
  explicit DccrnVaeImpl(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  EncoderOutput EncodeClean(const ComplexSpectrogram& x_spec);
  EncoderOutput EncodeNoise(const ComplexSpectrogram& d_spec);
  EncoderOutput EncodeNoisy(const ComplexSpectrogram& y_spec);
  ComplexSpectrogram DecodeClean(const LatentSample& z,
                                 const SkipFeatureStack& skips);
  ComplexSpectrogram DecodeNoise(const LatentSample& z,
                                 const SkipFeatureStack& skips);
  at::Tensor Discriminate(const ComplexSpectrogram& x_spec);

  // All parameters and buffers whose name starts with `group`.
  std::vector<std::pair<std::string, at::Tensor>> GroupTensors(
      const std::string& group, bool include_buffers = true) const;
  torch::nn::Module& Group(const std::string& group);

  Vae cvae{nullptr};
  Vae nvae{nullptr};
  Encoder nsvae{nullptr};
  Discriminator disc{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(DccrnVae);

LatentSample PosteriorMean(const CGDParams& p);

}  // namespace dvae

#endif  // DCCRN_VAE_MODELS_H_
