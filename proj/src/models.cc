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

#include "dccrn_vae/models.h"

#include <stdexcept>

namespace dvae {

std::string ProfileName(Profile p) {
  return p == Profile::kPaper ? "paper" : "desk";
}

Profile ParseProfile(const std::string& name) {
  if (name == "paper") return Profile::kPaper;
  if (name == "desk") return Profile::kDesk;
  throw std::invalid_argument("unknown profile '" + name +
                              "' (expected paper or desk)");
}

ModelConfig ModelConfig::Paper() {
  ModelConfig c;
  c.profile = Profile::kPaper;
  c.stft = StftConfig::Paper();
  c.channels = {32, 64, 128, 128, 256, 256};
  c.lstm_units = 128;
  c.latent_dim = 128;
  return c;
}

ModelConfig ModelConfig::Desk() { return ModelConfig{}; }

ModelConfig ModelConfig::ForProfile(Profile p) {
  return p == Profile::kPaper ? Paper() : Desk();
}

int64_t ModelConfig::bottleneck_freq() const {
  int64_t f = freq_bins();
  for (int64_t i = 0; i < levels(); ++i) f /= stride[0];
  return f;
}

void ModelConfig::Validate() const {
  stft.Validate();
  if (channels.empty()) throw std::invalid_argument("model needs at least one level");
  if (latent_dim < 1 || lstm_units < 1) {
    throw std::invalid_argument("latent_dim and lstm_units must be >= 1");
  }
  int64_t f = freq_bins();
  for (int64_t i = 0; i < levels(); ++i) {
    if (f % stride[0] != 0) {
      throw std::invalid_argument(
          "frequency height is not divisible by the stride at every level");
    }
    f /= stride[0];
  }
  if (f < 1) throw std::invalid_argument("too many levels for this fft size");
}

namespace {

ComplexConvOptions LevelOptions(int64_t in, int64_t out, const ModelConfig& c) {
  ComplexConvOptions o;
  o.in_channels = in;
  o.out_channels = out;
  o.kernel = c.kernel;
  o.stride = c.stride;
  o.padding = {c.kernel[0] / 2, 0};
  o.output_padding_freq = c.stride[0] - 1;
  o.causal = true;
  return o;
}

void CheckProfile(const ComplexSpectrogram& spec, const ModelConfig& config) {
  if (!(spec.config == config.stft) ||
      spec.real.size(-2) != config.stft.num_bins()) {
    throw std::invalid_argument(
        "spectrogram profile does not match the model configuration (expected " +
        std::to_string(config.stft.num_bins()) + " bins)");
  }
}

}  // namespace

ComplexTensor SpectrogramToFeatures(const ComplexSpectrogram& spec,
                                    const ModelConfig& config) {
  CheckProfile(spec, config);
  at::Tensor re = spec.real.dim() == 2 ? spec.real.unsqueeze(0) : spec.real;
  at::Tensor im = spec.imag.dim() == 2 ? spec.imag.unsqueeze(0) : spec.imag;
  const int64_t f = config.freq_bins();
  return {re.narrow(1, 1, f).unsqueeze(1), im.narrow(1, 1, f).unsqueeze(1)};
}

ComplexSpectrogram FeaturesToSpectrogram(const ComplexTensor& features,
                                         const ModelConfig& config) {
  at::Tensor re = features.re.squeeze(1);
  at::Tensor im = features.im.squeeze(1);
  // Reinsert a zero DC row.
  re = at::constant_pad_nd(re, {0, 0, 1, 0});
  im = at::constant_pad_nd(im, {0, 0, 1, 0});
  return {re, im, config.stft};
}

EncoderLevelImpl::EncoderLevelImpl(int64_t in_channels, int64_t out_channels,
                                   const ModelConfig& config) {
  conv = register_module(
      "conv", ComplexConv2d(LevelOptions(in_channels, out_channels, config)));
  norm = register_module("norm", ComplexBatchNorm(out_channels));
  act = register_module("act", ComplexPReLU(out_channels));
}

ComplexTensor EncoderLevelImpl::forward(const ComplexTensor& x) {
  return act->forward(norm->forward(conv->forward(x)));
}

ConvStackImpl::ConvStackImpl(const ModelConfig& config) {
  int64_t in = 1;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    levels_.push_back(register_module(
        "level" + std::to_string(i),
        EncoderLevel(in, config.channels[i], config)));
    in = config.channels[i];
  }
}

SkipFeatureStack ConvStackImpl::forward(const ComplexTensor& x) {
  SkipFeatureStack skips;
  ComplexTensor h = x;
  for (auto& level : levels_) {
    h = level->forward(h);
    skips.push_back(h);
  }
  return skips;
}

EncoderImpl::EncoderImpl(const ModelConfig& config) : config_(config) {
  config_.Validate();
  stack = register_module("stack", ConvStack(config_));
  lstm = register_module(
      "lstm", ComplexLstm(config_.bottleneck_features(), config_.lstm_units));
  mu_head = register_module(
      "mu_head", ComplexLinear(config_.lstm_units, config_.latent_dim));
  sigma_head = register_module(
      "sigma_head", ComplexLinear(config_.lstm_units, config_.latent_dim));
  delta_head = register_module(
      "delta_head", ComplexLinear(config_.lstm_units, config_.latent_dim));
}

namespace {

// (B, C, F, T) -> (B, T, C*F)
at::Tensor FlattenFrames(const at::Tensor& x) {
  return x.permute({0, 3, 1, 2}).flatten(2);
}

}  // namespace

EncoderOutput EncoderImpl::forward(const ComplexSpectrogram& spec) {
  ComplexTensor x = SpectrogramToFeatures(spec, config_);
  EncoderOutput out;
  out.skips = stack->forward(x);
  const ComplexTensor& bottom = out.skips.back();
  ComplexTensor h = lstm->forward({FlattenFrames(bottom.re), FlattenFrames(bottom.im)});
  ComplexTensor mu = mu_head->forward(h);
  ComplexTensor sg = sigma_head->forward(h);
  ComplexTensor dl = delta_head->forward(h);
  // Heads are (B, T, L); latents are laid out (B, L, T).
  auto lt = [](const at::Tensor& t) { return t.transpose(1, 2); };
  out.posterior = MakeCgd(lt(mu.re), lt(mu.im), lt(sg.re), lt(dl.re), lt(dl.im));
  return out;
}

DecoderImpl::DecoderImpl(const ModelConfig& config) : config_(config) {
  config_.Validate();
  project = register_module(
      "project",
      ComplexLinear(config_.latent_dim, config_.bottleneck_features()));
  const auto& ch = config_.channels;
  const int64_t n = config_.levels();
  // Deepest level first: input is cat(current, skip) with 2 * C_l channels.
  for (int64_t l = n - 1; l >= 0; --l) {
    const int64_t out = l > 0 ? ch[l - 1] : 1;
    const std::string tag = std::to_string(n - 1 - l);
    convs_.push_back(register_module(
        "deconv" + tag,
        ComplexConvTranspose2d(LevelOptions(2 * ch[l], out, config_))));
    if (l > 0) {
      norms_.push_back(register_module("norm" + tag, ComplexBatchNorm(out)));
      acts_.push_back(register_module("act" + tag, ComplexPReLU(out)));
    }
  }
}

ComplexSpectrogram DecoderImpl::forward(const LatentSample& z,
                                        const SkipFeatureStack& skips) {
  const int64_t n = config_.levels();
  if (static_cast<int64_t>(skips.size()) != n) {
    throw std::invalid_argument("decoder expects " + std::to_string(n) +
                                " skip feature maps");
  }
  if (z.re.dim() != 3 || z.re.size(1) != config_.latent_dim) {
    throw std::invalid_argument("decoder expects z of shape (B, L, T) with L = " +
                                std::to_string(config_.latent_dim));
  }
  const int64_t batch = z.re.size(0), frames = z.re.size(2);
  ComplexTensor p = project->forward({z.re.transpose(1, 2), z.im.transpose(1, 2)});
  auto to_map = [&](const at::Tensor& t) {
    return t.reshape({batch, frames, config_.channels.back(),
                      config_.bottleneck_freq()})
        .permute({0, 2, 3, 1});
  };
  ComplexTensor h{to_map(p.re), to_map(p.im)};
  for (int64_t k = 0; k < n; ++k) {
    const ComplexTensor& skip = skips[n - 1 - k];
    if (!skip.re.sizes().equals(h.re.sizes())) {
      throw std::invalid_argument("decoder skip " + std::to_string(n - 1 - k) +
                                  " has an incompatible shape");
    }
    h = convs_[k]->forward(ComplexCat(h, skip, 1));
    if (k + 1 < n) h = acts_[k]->forward(norms_[k]->forward(h));
  }
  return FeaturesToSpectrogram(h, config_);
}

VaeImpl::VaeImpl(const ModelConfig& config) {
  encoder = register_module("encoder", Encoder(config));
  decoder = register_module("decoder", Decoder(config));
}

DiscriminatorImpl::DiscriminatorImpl(const ModelConfig& config)
    : config_(config) {
  config_.Validate();
  stack = register_module("stack", ConvStack(config_));
  lstm = register_module("lstm",
                         RealLstm(2 * config_.bottleneck_features(), 1));
}

at::Tensor DiscriminatorImpl::forward(const ComplexSpectrogram& spec) {
  ComplexTensor x = SpectrogramToFeatures(spec, config_);
  const ComplexTensor bottom = stack->forward(x).back();
  at::Tensor seq = at::cat({FlattenFrames(bottom.re), FlattenFrames(bottom.im)}, 2);
  return lstm->forward(seq).mean({1, 2});
}

const std::vector<std::string>& ParameterGroups() {
  static const std::vector<std::string> groups = {
      kCleanEncoder, kCleanDecoder, kNoiseEncoder,
      kNoiseDecoder, kNoisyEncoder, kDiscriminator};
  return groups;
}

DccrnVaeImpl::DccrnVaeImpl(const ModelConfig& config) : config_(config) {
  cvae = register_module("cvae", Vae(config));
  nvae = register_module("nvae", Vae(config));
  nsvae = register_module("nsvae", Encoder(config));
  disc = register_module("disc", Discriminator(config));
}

EncoderOutput DccrnVaeImpl::EncodeClean(const ComplexSpectrogram& x_spec) {
  return cvae->encoder->forward(x_spec);
}
EncoderOutput DccrnVaeImpl::EncodeNoise(const ComplexSpectrogram& d_spec) {
  return nvae->encoder->forward(d_spec);
}
EncoderOutput DccrnVaeImpl::EncodeNoisy(const ComplexSpectrogram& y_spec) {
  return nsvae->forward(y_spec);
}
ComplexSpectrogram DccrnVaeImpl::DecodeClean(const LatentSample& z,
                                             const SkipFeatureStack& skips) {
  return cvae->decoder->forward(z, skips);
}
ComplexSpectrogram DccrnVaeImpl::DecodeNoise(const LatentSample& z,
                                             const SkipFeatureStack& skips) {
  return nvae->decoder->forward(z, skips);
}
at::Tensor DccrnVaeImpl::Discriminate(const ComplexSpectrogram& x_spec) {
  return disc->forward(x_spec);
}

std::vector<std::pair<std::string, at::Tensor>> DccrnVaeImpl::GroupTensors(
    const std::string& group, bool include_buffers) const {
  std::vector<std::pair<std::string, at::Tensor>> out;
  const std::string prefix = group + ".";
  for (const auto& item : named_parameters(/*recurse=*/true)) {
    if (item.key().rfind(prefix, 0) == 0) out.emplace_back(item.key(), item.value());
  }
  if (include_buffers) {
    for (const auto& item : named_buffers(/*recurse=*/true)) {
      if (item.key().rfind(prefix, 0) == 0) out.emplace_back(item.key(), item.value());
    }
  }
  return out;
}

torch::nn::Module& DccrnVaeImpl::Group(const std::string& group) {
  if (group == kCleanEncoder) return *cvae->encoder;
  if (group == kCleanDecoder) return *cvae->decoder;
  if (group == kNoiseEncoder) return *nvae->encoder;
  if (group == kNoiseDecoder) return *nvae->decoder;
  if (group == kNoisyEncoder) return *nsvae;
  if (group == kDiscriminator) return *disc;
  throw std::invalid_argument("unknown parameter group: " + group);
}

LatentSample PosteriorMean(const CGDParams& p) { return {p.mu_re, p.mu_im}; }

}  // namespace dvae
