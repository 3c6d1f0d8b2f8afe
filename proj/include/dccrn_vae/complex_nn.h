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

#ifndef DCCRN_VAE_COMPLEX_NN_H_
#define DCCRN_VAE_COMPLEX_NN_H_

#include <torch/torch.h>

#include <array>
#include <cstdint>

namespace dvae {

// A complex feature map stored as two real tensors of identical shape,
// usually (batch, channel, frequency, time).
struct ComplexTensor {
  at::Tensor re;
  at::Tensor im;

  ComplexTensor Detached() const { return {re.detach(), im.detach()}; }
};

ComplexTensor ComplexCat(const ComplexTensor& a, const ComplexTensor& b,
                         int64_t dim);

struct ComplexConvOptions {
  int64_t in_channels = 1;
  int64_t out_channels = 1;
  std::array<int64_t, 2> kernel = {5, 2};   // (frequency, time)
  std::array<int64_t, 2> stride = {2, 1};
  // Frequency padding is symmetric. Time padding applies only when
  // `causal` is false; a causal layer left-pads kernel_t - 1 frames.
  std::array<int64_t, 2> padding = {2, 0};
  // Extra frequency rows on the transposed layer so stride-2 exactly
  // doubles the height.
  int64_t output_padding_freq = 1;
  bool causal = true;
  bool bias = true;
};

// out_re = conv(x_re, W_re) - conv(x_im, W_im)
// out_im = conv(x_re, W_im) + conv(x_im, W_re)
class ComplexConv2dImpl : public torch::nn::Module {
 public:
  explicit ComplexConv2dImpl(const ComplexConvOptions& options);
  ComplexTensor forward(const ComplexTensor& x);

  const ComplexConvOptions& options() const { return options_; }

  at::Tensor weight_re, weight_im;  // (out, in, kf, kt)
  at::Tensor bias_re, bias_im;      // (out)

 private:
  ComplexConvOptions options_;
};
TORCH_MODULE(ComplexConv2d);

// Transpose of ComplexConv2d's linear map with the same combination rule.
// In causal mode the trailing kernel_t - 1 output frames are dropped so the
// time axis keeps its length and frame t only depends on frames <= t.
class ComplexConvTranspose2dImpl : public torch::nn::Module {
 public:
  explicit ComplexConvTranspose2dImpl(const ComplexConvOptions& options);
  ComplexTensor forward(const ComplexTensor& x);

  const ComplexConvOptions& options() const { return options_; }

  at::Tensor weight_re, weight_im;  // (in, out, kf, kt)
  at::Tensor bias_re, bias_im;

 private:
  ComplexConvOptions options_;
};
TORCH_MODULE(ComplexConvTranspose2d);

// Complex batch normalization with full 2x2 whitening of (re, im) per
// channel, a learnable symmetric 2x2 affine map and a complex bias.
class ComplexBatchNormImpl : public torch::nn::Module {
 public:
  static constexpr double kMomentum = 0.9;
  static constexpr double kEps = 1e-5;

  explicit ComplexBatchNormImpl(int64_t channels);
  ComplexTensor forward(const ComplexTensor& x);

  at::Tensor gamma_rr, gamma_ri, gamma_ii, beta_re, beta_im;
  at::Tensor running_mean_re, running_mean_im;
  at::Tensor running_vrr, running_vri, running_vii;
  at::Tensor num_batches_tracked;
};
TORCH_MODULE(ComplexBatchNorm);

// PReLU with one slope per channel applied to both parts independently.
class ComplexPReLUImpl : public torch::nn::Module {
 public:
  explicit ComplexPReLUImpl(int64_t channels, double init = 0.25);
  ComplexTensor forward(const ComplexTensor& x);

  at::Tensor slope;
};
TORCH_MODULE(ComplexPReLU);

// Single-layer real LSTM parameters (PyTorch gate order i, f, g, o).
struct LstmWeights {
  at::Tensor w_ih, w_hh, b_ih, b_hh;
};

// Runs a real LSTM over (B, T, in) with zero initial state; returns (B, T, H).
at::Tensor RunLstm(const at::Tensor& seq, const LstmWeights& w);

// Two independent real LSTMs combined as a complex recurrence:
//   out_re = LSTM_r(x_re) - LSTM_i(x_im)
//   out_im = LSTM_r(x_im) + LSTM_i(x_re)
class ComplexLstmImpl : public torch::nn::Module {
 public:
  ComplexLstmImpl(int64_t input_size, int64_t hidden_size);
  // seq parts are (B, T, input_size).
  ComplexTensor forward(const ComplexTensor& seq);

  int64_t input_size() const { return input_size_; }
  int64_t hidden_size() const { return hidden_size_; }

  LstmWeights real_lstm, imag_lstm;

 private:
  int64_t input_size_;
  int64_t hidden_size_;
};
TORCH_MODULE(ComplexLstm);

class RealLstmImpl : public torch::nn::Module {
 public:
  RealLstmImpl(int64_t input_size, int64_t hidden_size);
  at::Tensor forward(const at::Tensor& seq);

  LstmWeights weights;
};
TORCH_MODULE(RealLstm);

// Complex affine map over the last axis.
class ComplexLinearImpl : public torch::nn::Module {
 public:
  ComplexLinearImpl(int64_t in_features, int64_t out_features);
  ComplexTensor forward(const ComplexTensor& x);

  at::Tensor weight_re, weight_im;  // (out, in)
  at::Tensor bias_re, bias_im;
};
TORCH_MODULE(ComplexLinear);

}  // namespace dvae

#endif  // DCCRN_VAE_COMPLEX_NN_H_
