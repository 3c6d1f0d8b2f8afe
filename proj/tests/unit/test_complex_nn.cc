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

#include <torch/torch.h>

#include <cmath>
#include <numbers>

#include "dccrn_vae/complex_nn.h"
#include "dccrn_vae/grad_check.h"

using dvae::ComplexTensor;

namespace {

ComplexTensor RandC(at::IntArrayRef shape) {
  return {at::randn(shape, at::kDouble), at::randn(shape, at::kDouble)};
}

double MaxDiff(const at::Tensor& a, const at::Tensor& b) {
  return (a - b).abs().max().item<double>();
}

dvae::ComplexConvOptions Opts(int64_t in, int64_t out, bool causal = true) {
  dvae::ComplexConvOptions o;
  o.in_channels = in;
  o.out_channels = out;
  o.causal = causal;
  return o;
}

template <typename M>
void ToDouble(M& m) {
  m->to(at::kDouble);
}

}  // namespace

TEST_CASE("complex conv with a real kernel equals two real convolutions") {
  dvae::ComplexConv2d conv(Opts(3, 4, /*causal=*/false));
  ToDouble(conv);
  torch::NoGradGuard ng;
  conv->weight_im.zero_();
  conv->bias_re.normal_();
  auto x = RandC({2, 3, 16, 7});
  auto y = conv(x);
  at::Tensor ref_re = at::conv2d(x.re, conv->weight_re, conv->bias_re, {2, 1}, {2, 0});
  at::Tensor ref_im = at::conv2d(x.im, conv->weight_re, conv->bias_im, {2, 1}, {2, 0});
  CHECK(MaxDiff(y.re, ref_re) < 1e-12);
  CHECK(MaxDiff(y.im, ref_im) < 1e-12);
}

TEST_CASE("1x1 complex kernel multiplies") {
  auto o = Opts(1, 1);
  o.kernel = {1, 1};
  o.stride = {1, 1};
  o.padding = {0, 0};
  o.bias = false;
  dvae::ComplexConv2d conv(o);
  ToDouble(conv);
  torch::NoGradGuard ng;
  conv->weight_re.fill_(3.0);
  conv->weight_im.fill_(4.0);
  ComplexTensor x{at::full({1, 1, 1, 1}, 1.0, at::kDouble), at::full({1, 1, 1, 1}, 2.0, at::kDouble)};
  auto y = conv(x);
  // (1 + 2i)(3 + 4i) = -5 + 10i
  CHECK(y.re.item<double>() == -5.0);
  CHECK(y.im.item<double>() == 10.0);
}

TEST_CASE("identity kernel passes input through") {
  auto o = Opts(2, 2, false);
  o.kernel = {3, 1};
  o.stride = {1, 1};
  o.padding = {1, 0};
  dvae::ComplexConv2d conv(o);
  ToDouble(conv);
  torch::NoGradGuard ng;
  conv->weight_re.zero_();
  conv->weight_im.zero_();
  for (int c = 0; c < 2; ++c) conv->weight_re[c][c][1][0] = 1.0;
  auto x = RandC({2, 2, 9, 5});
  auto y = conv(x);
  CHECK(MaxDiff(y.re, x.re) == 0.0);
  CHECK(MaxDiff(y.im, x.im) == 0.0);
}

TEST_CASE("transposed layer is the adjoint of the conjugate-weight conv") {
  auto o = Opts(3, 2, /*causal=*/false);
  o.padding = {2, 1};
  o.bias = false;
  dvae::ComplexConv2d conv(o);
  auto ot = Opts(2, 3, false);
  ot.padding = {2, 1};
  ot.bias = false;
  dvae::ComplexConvTranspose2d convt(ot);
  ToDouble(conv);
  ToDouble(convt);
  {
    torch::NoGradGuard ng;
    convt->weight_re.copy_(conv->weight_re);
    convt->weight_im.copy_(-conv->weight_im);
  }
  auto x = RandC({2, 3, 16, 6});
  auto y0 = conv(x);
  auto y = RandC(y0.re.sizes());
  auto back = convt(y);
  REQUIRE(back.re.sizes() == x.re.sizes());
  const double lhs = (y0.re * y.re + y0.im * y.im).sum().item<double>();
  const double rhs = (x.re * back.re + x.im * back.im).sum().item<double>();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("transposed conv with a real kernel and shape doubling") {
  auto o = Opts(4, 2);
  dvae::ComplexConvTranspose2d convt(o);
  ToDouble(convt);
  torch::NoGradGuard ng;
  convt->weight_im.zero_();
  auto x = RandC({2, 4, 8, 5});
  auto y = convt(x);
  CHECK(y.re.sizes() == at::IntArrayRef({2, 2, 16, 5}));
  at::Tensor ref = at::conv_transpose2d(x.re, convt->weight_re, {}, {2, 1}, {2, 0}, {1, 0})
                       .narrow(3, 0, 5);
  CHECK(MaxDiff(y.re, ref) < 1e-12);
}

TEST_CASE("stride-2 layers map 256 rows to 4 and back") {
  int64_t f = 256;
  at::Tensor x = at::randn({1, 1, f, 3});
  ComplexTensor h{x, x};
  std::vector<dvae::ComplexConv2d> enc;
  for (int l = 0; l < 6; ++l) {
    enc.emplace_back(Opts(1, 1));
    h = enc.back()(h);
  }
  CHECK(h.re.size(2) == 4);
  for (int l = 0; l < 6; ++l) h = dvae::ComplexConvTranspose2d(Opts(1, 1))(h);
  CHECK(h.re.size(2) == 256);
  CHECK(h.re.size(3) == 3);
}

TEST_CASE("causal layers never look ahead") {
  dvae::ComplexConv2d conv(Opts(2, 2));
  dvae::ComplexConvTranspose2d convt(Opts(2, 2));
  ToDouble(conv);
  ToDouble(convt);
  torch::NoGradGuard ng;
  auto x = RandC({2, 2, 8, 10});
  auto x2 = ComplexTensor{x.re.clone(), x.im.clone()};
  x2.re.select(3, 6).add_(5.0);
  x2.im.select(3, 6).add_(-3.0);
  for (int which = 0; which < 2; ++which) {
    auto a = which ? convt(x) : conv(x);
    auto b = which ? convt(x2) : conv(x2);
    CHECK(a.re.size(3) == 10);
    CHECK(MaxDiff(a.re.narrow(3, 0, 6), b.re.narrow(3, 0, 6)) == 0.0);
    CHECK(MaxDiff(a.im.narrow(3, 0, 6), b.im.narrow(3, 0, 6)) == 0.0);
    CHECK(MaxDiff(a.re.select(3, 6), b.re.select(3, 6)) > 0.0);
  }
}

TEST_CASE("conv without bias commutes with a global phase") {
  auto o = Opts(2, 3);
  o.bias = false;
  dvae::ComplexConv2d conv(o);
  ToDouble(conv);
  torch::NoGradGuard ng;
  auto x = RandC({1, 2, 8, 4});
  const double c = std::cos(0.7), s = std::sin(0.7);
  auto y = conv(x);
  auto yr = conv(ComplexTensor{c * x.re - s * x.im, s * x.re + c * x.im});
  CHECK(MaxDiff(yr.re, c * y.re - s * y.im) < 1e-12);
  CHECK(MaxDiff(yr.im, s * y.re + c * y.im) < 1e-12);
}

TEST_CASE("batch norm whitens like an eigen-decomposition oracle") {
  dvae::ComplexBatchNorm bn(2);
  ToDouble(bn);
  at::Tensor a = at::randn({8, 2, 5, 6}, at::kDouble);
  at::Tensor b = at::randn({8, 2, 5, 6}, at::kDouble);
  ComplexTensor x{3 * a + 1, 0.5 * a + 0.2 * b - 2};
  auto y = bn(x);
  for (int c = 0; c < 2; ++c) {
    at::Tensor pts = at::stack({x.re.select(1, c).flatten(), x.im.select(1, c).flatten()}, 0);
    at::Tensor centred = pts - pts.mean(1, true);
    at::Tensor cov = at::matmul(centred, centred.t()) / centred.size(1) +
                     1e-5 * at::eye(2, at::kDouble);
    auto [evals, evecs] = at::linalg_eigh(cov);
    at::Tensor isqrt = at::matmul(evecs * evals.rsqrt(), evecs.t());
    at::Tensor want = at::matmul(isqrt, centred);
    CHECK(MaxDiff(y.re.select(1, c).flatten(), want[0]) < 1e-10);
    CHECK(MaxDiff(y.im.select(1, c).flatten(), want[1]) < 1e-10);
  }
}

TEST_CASE("batch norm running statistics follow the EMA") {
  dvae::ComplexBatchNorm bn(1);
  ToDouble(bn);
  double mean = 0.0, vrr = 1.0;
  for (int k = 0; k < 3; ++k) {
    ComplexTensor x{at::randn({4, 1, 3, 3}, at::kDouble) * (k + 1) + k, at::randn({4, 1, 3, 3}, at::kDouble)};
    bn(x);
    const double m = x.re.mean().item<double>();
    const double v = (x.re - m).pow(2).mean().item<double>();
    mean = 0.9 * mean + 0.1 * m;
    vrr = 0.9 * vrr + 0.1 * v;
  }
  CHECK(bn->running_mean_re.item<double>() == doctest::Approx(mean).epsilon(1e-12));
  CHECK(bn->running_vrr.item<double>() == doctest::Approx(vrr).epsilon(1e-12));
  CHECK(bn->num_batches_tracked.item<int64_t>() == 3);
}

TEST_CASE("batch norm guards") {
  dvae::ComplexBatchNorm bn(2);
  bn->eval();
  auto x = ComplexTensor{at::randn({2, 2, 3, 3}), at::randn({2, 2, 3, 3})};
  CHECK_THROWS_AS(bn(x), std::logic_error);
  bn->train();
  CHECK_THROWS_AS(bn(ComplexTensor{at::randn({1, 2, 3, 3}), at::randn({1, 2, 3, 3})}), std::invalid_argument);
  CHECK_THROWS_AS(bn(ComplexTensor{at::randn({2, 3, 3, 3}), at::randn({2, 3, 3, 3})}), std::invalid_argument);
  bn(x);
  bn->eval();
  CHECK_NOTHROW(bn(ComplexTensor{at::randn({1, 2, 3, 3}), at::randn({1, 2, 3, 3})}));
}

TEST_CASE("PReLU acts on each part") {
  dvae::ComplexPReLU act(1);
  ComplexTensor x{at::tensor({-2.0f, 3.0f}).view({1, 1, 1, 2}), at::tensor({1.0f, -4.0f}).view({1, 1, 1, 2})};
  auto y = act(x);
  CHECK(y.re.flatten()[0].item<float>() == -0.5f);
  CHECK(y.re.flatten()[1].item<float>() == 3.0f);
  CHECK(y.im.flatten()[0].item<float>() == 1.0f);
  CHECK(y.im.flatten()[1].item<float>() == -1.0f);
}

TEST_CASE("complex LSTM combination rule") {
  dvae::ComplexLstm lstm(3, 4);
  ToDouble(lstm);
  auto x = ComplexTensor{at::randn({2, 5, 3}, at::kDouble), at::randn({2, 5, 3}, at::kDouble)};
  {
    torch::NoGradGuard ng;
    for (auto& p : lstm->parameters()) p.zero_();
    auto y = lstm(x);
    CHECK(y.re.abs().max().item<double>() == 0.0);
    CHECK(y.im.abs().max().item<double>() == 0.0);
    for (auto* t : {&lstm->real_lstm.w_ih, &lstm->real_lstm.w_hh, &lstm->real_lstm.b_ih}) t->normal_();
  }
  auto y = lstm(x);
  auto ref = torch::nn::LSTM(torch::nn::LSTMOptions(3, 4).batch_first(true));
  ref->to(at::kDouble);
  {
    torch::NoGradGuard ng;
    ref->named_parameters()["weight_ih_l0"].copy_(lstm->real_lstm.w_ih);
    ref->named_parameters()["weight_hh_l0"].copy_(lstm->real_lstm.w_hh);
    ref->named_parameters()["bias_ih_l0"].copy_(lstm->real_lstm.b_ih);
    ref->named_parameters()["bias_hh_l0"].copy_(lstm->real_lstm.b_hh);
  }
  CHECK(MaxDiff(y.re, std::get<0>(ref->forward(x.re))) < 1e-12);
  CHECK(MaxDiff(y.im, std::get<0>(ref->forward(x.im))) < 1e-12);
}

TEST_CASE("single LSTM step by hand") {
  dvae::LstmWeights w{at::tensor({0.5, -0.3, 0.8, 1.2}, at::kDouble).view({4, 1}),
                      at::zeros({4, 1}, at::kDouble),
                      at::tensor({0.1, 0.0, -0.2, 0.3}, at::kDouble),
                      at::zeros({4}, at::kDouble)};
  const double x = 0.7;
  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  const double i = sig(0.5 * x + 0.1), g = std::tanh(0.8 * x - 0.2), o = sig(1.2 * x + 0.3);
  const double h = o * std::tanh(i * g);
  at::Tensor out = dvae::RunLstm(at::full({1, 1, 1}, x, at::kDouble), w);
  CHECK(out.item<double>() == doctest::Approx(h).epsilon(1e-14));
  CHECK_THROWS_AS(dvae::RunLstm(at::zeros({1, 1, 2}, at::kDouble), w), std::invalid_argument);
}

TEST_CASE("complex linear multiplies by a complex matrix") {
  dvae::ComplexLinear lin(3, 2);
  ToDouble(lin);
  auto x = ComplexTensor{at::randn({4, 3}, at::kDouble), at::randn({4, 3}, at::kDouble)};
  auto y = lin(x);
  at::Tensor w = at::complex(lin->weight_re.detach(), lin->weight_im.detach());
  at::Tensor want = at::matmul(at::complex(x.re, x.im), w.t()) +
                    at::complex(lin->bias_re.detach(), lin->bias_im.detach());
  CHECK(MaxDiff(y.re, at::real(want)) < 1e-12);
  CHECK(MaxDiff(y.im, at::imag(want)) < 1e-12);
}

TEST_CASE("finite-difference checks on single layers") {
  dvae::ComplexLinear lin(3, 2);
  ToDouble(lin);
  auto x = ComplexTensor{at::randn({2, 3}, at::kDouble).requires_grad_(), at::randn({2, 3}, at::kDouble).requires_grad_()};
  at::Tensor w1 = dvae::ProbeWeights({2, 2}, 1), w2 = dvae::ProbeWeights({2, 2}, 2);
  auto lin_fn = [&] {
    auto y = lin(x);
    return (w1 * y.re).sum() + (w2 * y.im).sum();
  };
  auto r = dvae::GradCheck(lin_fn, {{"x.re", x.re}, {"x.im", x.im}, {"weight_re", lin->weight_re}});
  CHECK(r.max_rel_error < 1e-7);

  dvae::ComplexPReLU act(2);
  ToDouble(act);
  auto px = ComplexTensor{at::randn({2, 2, 3, 3}, at::kDouble).requires_grad_(), at::randn({2, 2, 3, 3}, at::kDouble).requires_grad_()};
  at::Tensor p1 = dvae::ProbeWeights({2, 2, 3, 3}, 3), p2 = dvae::ProbeWeights({2, 2, 3, 3}, 4);
  auto prelu_fn = [&] {
    auto y = act(px);
    return (p1 * y.re).sum() + (p2 * y.im).sum();
  };
  auto pr = dvae::GradCheck(prelu_fn, {{"x.re", px.re}, {"slope", act->slope}});
  CHECK(pr.max_rel_error < 1e-7);
  CHECK(pr.checked + pr.skipped == 38);

  // A point exactly on the kink is detected and skipped.
  at::Tensor kink = at::zeros({1}, at::kDouble).requires_grad_();
  auto relu_fn = [&] { return at::relu(kink).sum() * 2.0; };
  auto kr = dvae::GradCheck(relu_fn, {{"kink", kink}});
  CHECK(kr.skipped == 1);
  CHECK(kr.checked == 0);
}

TEST_CASE("finite-difference check on conv, norm and LSTM layers") {
  dvae::ComplexConv2d conv(Opts(2, 2));
  dvae::ComplexBatchNorm bn(2);
  dvae::ComplexLstm lstm(4, 3);
  ToDouble(conv);
  ToDouble(bn);
  ToDouble(lstm);
  auto x = ComplexTensor{at::randn({2, 2, 4, 3}, at::kDouble).requires_grad_(), at::randn({2, 2, 4, 3}, at::kDouble).requires_grad_()};
  at::Tensor q1 = dvae::ProbeWeights({2, 3, 3}, 5), q2 = dvae::ProbeWeights({2, 3, 3}, 6);
  auto fn = [&] {
    auto h = bn(conv(x));
    // (B, C, F, T) -> (B, T, C * F)
    ComplexTensor seq{h.re.permute({0, 3, 1, 2}).flatten(2), h.im.permute({0, 3, 1, 2}).flatten(2)};
    auto y = lstm(seq);
    return (q1 * y.re).sum() + (q2 * y.im).sum();
  };
  dvae::NamedTensors params{{"x.re", x.re}, {"x.im", x.im}};
  for (auto& p : conv->named_parameters()) params.emplace_back("conv." + p.key(), p.value());
  for (auto& p : bn->named_parameters()) params.emplace_back("bn." + p.key(), p.value());
  for (auto& p : lstm->named_parameters()) params.emplace_back("lstm." + p.key(), p.value());
  dvae::GradCheckOptions opts;
  opts.max_elements_per_tensor = 6;
  auto r = dvae::GradCheck(fn, params, opts);
  CHECK(r.skipped == 0);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("shape errors are reported") {
  dvae::ComplexConv2d conv(Opts(2, 2));
  CHECK_THROWS_WITH(conv(ComplexTensor{at::randn({1, 3, 4, 4}), at::randn({1, 3, 4, 4})}),
                    doctest::Contains("expected (B, 2, F, T)"));
  CHECK_THROWS_AS(conv(ComplexTensor{at::randn({1, 2, 4, 4}), at::randn({1, 2, 4, 5})}),
                  std::invalid_argument);
  dvae::ComplexLinear lin(3, 2);
  CHECK_THROWS_AS(lin(ComplexTensor{at::randn({1, 4}), at::randn({1, 4})}), std::invalid_argument);
}
