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

#include "dccrn_vae/complex_nn.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dvae {

namespace {

// Zero-mean uniform with fan-in scaling, split evenly between the real and
// imaginary parts.
at::Tensor InitComplexPart(at::IntArrayRef shape, int64_t fan_in) {
  double bound = std::sqrt(3.0 / static_cast<double>(fan_in)) / std::sqrt(2.0);
  return at::empty(shape, at::kFloat).uniform_(-bound, bound);
}

void CheckSameShape(const ComplexTensor& x, const char* op) {
  if (!x.re.sizes().equals(x.im.sizes())) {
    throw std::invalid_argument(std::string(op) +
                                ": real and imaginary shapes differ");
  }
}

void CheckChannels(const ComplexTensor& x, int64_t expected, const char* op) {
  CheckSameShape(x, op);
  if (x.re.dim() != 4 || x.re.size(1) != expected) {
    throw std::invalid_argument(
        std::string(op) + ": expected (B, " + std::to_string(expected) +
        ", F, T) input, got " + std::to_string(x.re.dim()) + "-d with " +
        (x.re.dim() > 1 ? std::to_string(x.re.size(1)) : std::string("?")) +
        " channels");
  }
}

LstmWeights RegisterLstm(torch::nn::Module& m, const std::string& prefix,
                         int64_t input_size, int64_t hidden) {
  double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto u = [&](at::IntArrayRef shape) {
    return at::empty(shape, at::kFloat).uniform_(-bound, bound);
  };
  LstmWeights w;
  w.w_ih = m.register_parameter(prefix + "w_ih", u({4 * hidden, input_size}));
  w.w_hh = m.register_parameter(prefix + "w_hh", u({4 * hidden, hidden}));
  w.b_ih = m.register_parameter(prefix + "b_ih", u({4 * hidden}));
  w.b_hh = m.register_parameter(prefix + "b_hh", u({4 * hidden}));
  return w;
}

}  // namespace

ComplexTensor ComplexCat(const ComplexTensor& a, const ComplexTensor& b,
                         int64_t dim) {
  return {at::cat({a.re, b.re}, dim), at::cat({a.im, b.im}, dim)};
}

ComplexConv2dImpl::ComplexConv2dImpl(const ComplexConvOptions& options)
    : options_(options) {
  const auto& o = options_;
  int64_t fan_in = o.in_channels * o.kernel[0] * o.kernel[1];
  std::vector<int64_t> shape{o.out_channels, o.in_channels, o.kernel[0],
                             o.kernel[1]};
  weight_re = register_parameter("weight_re", InitComplexPart(shape, fan_in));
  weight_im = register_parameter("weight_im", InitComplexPart(shape, fan_in));
  bias_re = register_parameter("bias_re", at::zeros({o.out_channels}),
                               o.bias);
  bias_im = register_parameter("bias_im", at::zeros({o.out_channels}),
                               o.bias);
}

ComplexTensor ComplexConv2dImpl::forward(const ComplexTensor& x) {
  const auto& o = options_;
  CheckChannels(x, o.in_channels, "complex_conv2d");
  at::Tensor input = at::cat({x.re, x.im}, 1);
  int64_t pad_t = o.padding[1];
  if (o.causal) {
    input = at::constant_pad_nd(input, {o.kernel[1] - 1, 0});
    pad_t = 0;
  }
  at::Tensor weight =
      at::cat({at::cat({weight_re, -weight_im}, 1), at::cat({weight_im, weight_re}, 1)}, 0);
  at::Tensor out = at::conv2d(input, weight, {}, {o.stride[0], o.stride[1]},
                              {o.padding[0], pad_t});
  ComplexTensor y{out.narrow(1, 0, o.out_channels),
                  out.narrow(1, o.out_channels, o.out_channels)};
  if (o.bias) {
    y.re = y.re + bias_re.view({1, -1, 1, 1});
    y.im = y.im + bias_im.view({1, -1, 1, 1});
  }
  return y;
}

ComplexConvTranspose2dImpl::ComplexConvTranspose2dImpl(
    const ComplexConvOptions& options)
    : options_(options) {
  const auto& o = options_;
  int64_t fan_in = o.in_channels * o.kernel[0] * o.kernel[1];
  std::vector<int64_t> shape{o.in_channels, o.out_channels, o.kernel[0],
                             o.kernel[1]};
  weight_re = register_parameter("weight_re", InitComplexPart(shape, fan_in));
  weight_im = register_parameter("weight_im", InitComplexPart(shape, fan_in));
  bias_re = register_parameter("bias_re", at::zeros({o.out_channels}),
                               o.bias);
  bias_im = register_parameter("bias_im", at::zeros({o.out_channels}),
                               o.bias);
}

ComplexTensor ComplexConvTranspose2dImpl::forward(const ComplexTensor& x) {
  const auto& o = options_;
  CheckChannels(x, o.in_channels, "complex_conv_transpose2d");
  at::Tensor input = at::cat({x.re, x.im}, 1);
  at::Tensor weight =
      at::cat({at::cat({weight_re, weight_im}, 1), at::cat({-weight_im, weight_re}, 1)}, 0);
  const int64_t pad_t = o.causal ? 0 : o.padding[1];
  at::Tensor out = at::conv_transpose2d(
      input, weight, {}, {o.stride[0], o.stride[1]}, {o.padding[0], pad_t},
      {o.output_padding_freq, 0});
  if (o.causal && o.kernel[1] > 1) {
    out = out.narrow(3, 0, out.size(3) - (o.kernel[1] - 1));
  }
  ComplexTensor y{out.narrow(1, 0, o.out_channels),
                  out.narrow(1, o.out_channels, o.out_channels)};
  if (o.bias) {
    y.re = y.re + bias_re.view({1, -1, 1, 1});
    y.im = y.im + bias_im.view({1, -1, 1, 1});
  }
  return y;
}

ComplexBatchNormImpl::ComplexBatchNormImpl(int64_t channels) {
  gamma_rr = register_parameter("gamma_rr", at::ones({channels}));
  gamma_ri = register_parameter("gamma_ri", at::zeros({channels}));
  gamma_ii = register_parameter("gamma_ii", at::ones({channels}));
  beta_re = register_parameter("beta_re", at::zeros({channels}));
  beta_im = register_parameter("beta_im", at::zeros({channels}));
  running_mean_re = register_buffer("running_mean_re", at::zeros({channels}));
  running_mean_im = register_buffer("running_mean_im", at::zeros({channels}));
  running_vrr = register_buffer("running_vrr", at::ones({channels}));
  running_vri = register_buffer("running_vri", at::zeros({channels}));
  running_vii = register_buffer("running_vii", at::ones({channels}));
  num_batches_tracked =
      register_buffer("num_batches_tracked", at::zeros({1}, at::kLong));
}

ComplexTensor ComplexBatchNormImpl::forward(const ComplexTensor& x) {
  CheckChannels(x, gamma_rr.size(0), "complex_batch_norm");
  auto bc = [](const at::Tensor& t) { return t.view({1, -1, 1, 1}); };
  at::Tensor mean_re, mean_im, vrr, vri, vii;
  if (is_training()) {
    if (x.re.size(0) < 2) {
      throw std::invalid_argument(
          "complex_batch_norm: train mode needs batch size >= 2");
    }
    const std::vector<int64_t> dims{0, 2, 3};
    mean_re = x.re.mean(dims);
    mean_im = x.im.mean(dims);
    at::Tensor cr = x.re - bc(mean_re);
    at::Tensor ci = x.im - bc(mean_im);
    vrr = (cr * cr).mean(dims);
    vri = (cr * ci).mean(dims);
    vii = (ci * ci).mean(dims);
    {
      at::NoGradGuard guard;
      const double m = kMomentum;
      auto ema = [m](at::Tensor& run, const at::Tensor& batch) {
        run.mul_(m).add_(batch.detach().to(run.scalar_type()), 1.0 - m);
      };
      ema(running_mean_re, mean_re);
      ema(running_mean_im, mean_im);
      ema(running_vrr, vrr);
      ema(running_vri, vri);
      ema(running_vii, vii);
      num_batches_tracked.add_(1);
    }
  } else {
    if (num_batches_tracked.item<int64_t>() == 0) {
      throw std::logic_error(
          "complex_batch_norm: eval mode used before any train-mode statistics");
    }
    auto cast = [&](const at::Tensor& t) { return t.to(x.re.scalar_type()); };
    mean_re = cast(running_mean_re);
    mean_im = cast(running_mean_im);
    vrr = cast(running_vrr);
    vri = cast(running_vri);
    vii = cast(running_vii);
  }
  vrr = vrr + kEps;
  vii = vii + kEps;
  // Inverse square root of [[vrr, vri], [vri, vii]] in closed form.
  at::Tensor s = at::sqrt(vrr * vii - vri * vri);
  at::Tensor t = at::sqrt(vrr + vii + 2.0 * s);
  at::Tensor inv = 1.0 / (s * t);
  at::Tensor wrr = (vii + s) * inv;
  at::Tensor wii = (vrr + s) * inv;
  at::Tensor wri = -vri * inv;

  at::Tensor cr = x.re - bc(mean_re);
  at::Tensor ci = x.im - bc(mean_im);
  at::Tensor hr = bc(wrr) * cr + bc(wri) * ci;
  at::Tensor hi = bc(wri) * cr + bc(wii) * ci;
  return {bc(gamma_rr) * hr + bc(gamma_ri) * hi + bc(beta_re),
          bc(gamma_ri) * hr + bc(gamma_ii) * hi + bc(beta_im)};
}

ComplexPReLUImpl::ComplexPReLUImpl(int64_t channels, double init) {
  slope = register_parameter("slope", at::full({channels}, init));
}

ComplexTensor ComplexPReLUImpl::forward(const ComplexTensor& x) {
  CheckSameShape(x, "prelu");
  at::Tensor a = slope.to(x.re.scalar_type());
  return {at::prelu(x.re, a), at::prelu(x.im, a)};
}

at::Tensor RunLstm(const at::Tensor& seq, const LstmWeights& w) {
  if (seq.dim() != 3 || seq.size(2) != w.w_ih.size(1)) {
    throw std::invalid_argument("lstm: expected (B, T, " +
                                std::to_string(w.w_ih.size(1)) + ") input");
  }
  const int64_t hidden = w.w_hh.size(1);
  at::Tensor h0 = at::zeros({1, seq.size(0), hidden}, seq.options());
  auto out = at::lstm(seq, {h0, h0}, {w.w_ih, w.w_hh, w.b_ih, w.b_hh},
                      /*has_biases=*/true, /*num_layers=*/1, /*dropout=*/0.0,
                      /*train=*/false, /*bidirectional=*/false,
                      /*batch_first=*/true);
  return std::get<0>(out);
}

ComplexLstmImpl::ComplexLstmImpl(int64_t input_size, int64_t hidden_size)
    : input_size_(input_size), hidden_size_(hidden_size) {
  real_lstm = RegisterLstm(*this, "real_", input_size, hidden_size);
  imag_lstm = RegisterLstm(*this, "imag_", input_size, hidden_size);
}

ComplexTensor ComplexLstmImpl::forward(const ComplexTensor& seq) {
  CheckSameShape(seq, "complex_lstm");
  const int64_t batch = seq.re.size(0);
  // Stack both parts along the batch so each real LSTM runs once.
  at::Tensor stacked = at::cat({seq.re, seq.im}, 0);
  at::Tensor r = RunLstm(stacked, real_lstm);
  at::Tensor i = RunLstm(stacked, imag_lstm);
  at::Tensor r_re = r.narrow(0, 0, batch), r_im = r.narrow(0, batch, batch);
  at::Tensor i_re = i.narrow(0, 0, batch), i_im = i.narrow(0, batch, batch);
  return {r_re - i_im, r_im + i_re};
}

RealLstmImpl::RealLstmImpl(int64_t input_size, int64_t hidden_size) {
  weights = RegisterLstm(*this, "", input_size, hidden_size);
}

at::Tensor RealLstmImpl::forward(const at::Tensor& seq) {
  return RunLstm(seq, weights);
}

ComplexLinearImpl::ComplexLinearImpl(int64_t in_features,
                                     int64_t out_features) {
  weight_re = register_parameter(
      "weight_re", InitComplexPart({out_features, in_features}, in_features));
  weight_im = register_parameter(
      "weight_im", InitComplexPart({out_features, in_features}, in_features));
  bias_re = register_parameter("bias_re", at::zeros({out_features}));
  bias_im = register_parameter("bias_im", at::zeros({out_features}));
}

ComplexTensor ComplexLinearImpl::forward(const ComplexTensor& x) {
  CheckSameShape(x, "complex_linear");
  if (x.re.size(-1) != weight_re.size(1)) {
    throw std::invalid_argument("complex_linear: expected " +
                                std::to_string(weight_re.size(1)) +
                                " input features");
  }
  return {at::linear(x.re, weight_re, bias_re) - at::linear(x.im, weight_im),
          at::linear(x.re, weight_im, bias_im) + at::linear(x.im, weight_re)};
}

}  // namespace dvae
