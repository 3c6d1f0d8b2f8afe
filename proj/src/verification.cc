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

#include "dccrn_vae/verification.h"

#include <torch/torch.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>

#include "dccrn_vae/checkpoint.h"
#include "dccrn_vae/complex_gaussian.h"
#include "dccrn_vae/complex_nn.h"
#include "dccrn_vae/data.h"
#include "dccrn_vae/losses.h"
#include "dccrn_vae/models.h"
#include "dccrn_vae/stft.h"
#include "dccrn_vae/stoi.h"

namespace dvae {

namespace {

struct Check {
  bool ok;
  std::string detail;
};

class Suite {
 public:
  void Run(const std::string& family, const std::string& name,
           const std::function<Check()>& fn) {
    CheckOutcome out{family, name, false, ""};
    try {
      Check c = fn();
      out.passed = c.ok;
      out.detail = c.detail;
    } catch (const std::exception& e) {
      out.detail = std::string("exception: ") + e.what();
    }
    report_.checks.push_back(out);
  }
  SuiteReport Take() { return std::move(report_); }

 private:
  SuiteReport report_;
};

std::string Fmt(const char* label, double v) {
  std::ostringstream os;
  os << label << '=' << v;
  return os.str();
}

double RelL2(const at::Tensor& a, const at::Tensor& b) {
  return ((a - b).norm() / b.norm()).item<double>();
}

at::Tensor Probe(const ComplexTensor& t, uint64_t seed) {
  return (t.re * ProbeWeights(t.re.sizes(), seed)).sum() +
         (t.im * ProbeWeights(t.im.sizes(), seed + 1)).sum();
}

NamedTensors Leaves(torch::nn::Module& m, const std::string& prefix) {
  NamedTensors out;
  for (auto& item : m.named_parameters(true)) out.emplace_back(prefix + item.key(), item.value());
  return out;
}

ComplexTensor RandomComplex(at::IntArrayRef shape, double scale = 1.0) {
  return {(at::randn(shape, at::kDouble) * scale).requires_grad_(),
          (at::randn(shape, at::kDouble) * scale).requires_grad_()};
}

}  // namespace

std::map<std::string, std::pair<int, int>> SuiteReport::Counts() const {
  std::map<std::string, std::pair<int, int>> out;
  for (const auto& c : checks) {
    auto& [passed, total] = out[c.family];
    passed += c.passed ? 1 : 0;
    ++total;
  }
  return out;
}

bool SuiteReport::AllPassed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

SuiteReport RunSelfTest(uint64_t seed) {
  torch::manual_seed(seed);
  Suite s;

  s.Run("stft", "perfect reconstruction (paper profile, 64-bit)", [] {
    ConvStft stft(StftConfig::Paper(), at::kDouble);
    at::Tensor x = at::rand({16000}, at::kDouble) * 2 - 1;
    const double err = RelL2(stft.Synthesize(stft.Analyze(x), 16000), x);
    return Check{err < 1e-6, Fmt("rel_err", err)};
  });
  s.Run("stft", "perfect reconstruction (paper profile, 32-bit)", [] {
    ConvStft stft(StftConfig::Paper(), at::kFloat);
    at::Tensor x = at::rand({16000}, at::kFloat) * 2 - 1;
    const double err = RelL2(stft.Synthesize(stft.Analyze(x), 16000), x);
    return Check{err < 1e-3, Fmt("rel_err", err)};
  });
  s.Run("stft", "linearity", [] {
    ConvStft stft(StftConfig::Desk(), at::kDouble);
    at::Tensor x = at::randn({4000}, at::kDouble), y = at::randn({4000}, at::kDouble);
    auto lhs = stft.Analyze(0.3 * x - 1.7 * y);
    auto sx = stft.Analyze(x), sy = stft.Analyze(y);
    const double err = std::max(RelL2(lhs.real, 0.3 * sx.real - 1.7 * sy.real),
                                RelL2(lhs.imag, 0.3 * sx.imag - 1.7 * sy.imag));
    return Check{err < 1e-12, Fmt("rel_err", err)};
  });
  s.Run("stft", "bin-centre cosine peaks at its bin", [] {
    const StftConfig cfg = StftConfig::Paper();
    const int k = 37;
    at::Tensor n = at::arange(16000, at::kDouble);
    at::Tensor x = at::cos(2 * std::numbers::pi * k * n / cfg.fft_size);
    auto spec = ConvStft(cfg, at::kDouble).Analyze(x);
    at::Tensor mag = (spec.real.pow(2) + spec.imag.pow(2)).sqrt();
    at::Tensor interior = mag.narrow(1, 5, mag.size(1) - 10);
    const bool ok = (interior.argmax(0) == k).all().item<bool>();
    return Check{ok, "k=37"};
  });

  s.Run("complex-gaussian", "make_cgd validity", [] {
    at::Tensor a = at::randn({4, 64}, at::kDouble) * 10;
    CGDParams p = MakeCgd(a, a * 0.5, at::randn({4, 64}, at::kDouble) * 10,
                          at::randn({4, 64}, at::kDouble) * 50,
                          at::randn({4, 64}, at::kDouble) * 50);
    at::Tensor dmag = (p.delta_re.pow(2) + p.delta_im.pow(2)).sqrt();
    const bool ok = (p.sigma > 0).all().item<bool>() && (dmag < p.sigma).all().item<bool>();
    return Check{ok, ""};
  });
  s.Run("complex-gaussian", "sampling moments", [seed] {
    const int64_t n = 100000;
    auto full = [&](double v) { return at::full({n}, v, at::kDouble); };
    CGDParams p{full(1), full(2), full(2), full(0.5), full(0.5)};
    at::Generator gen = MakeGenerator(seed);
    LatentSample z = SampleCgd(p, gen);
    at::Tensor er = z.re - 1, ei = z.im - 2;
    const double mr = er.mean().item<double>(), mi = ei.mean().item<double>();
    const double var = (er * er + ei * ei).mean().item<double>();
    const double pr = (er * er - ei * ei).mean().item<double>();
    const double pi = (2 * er * ei).mean().item<double>();
    const bool ok = std::abs(mr) < 0.02 && std::abs(mi) < 0.02 &&
                    std::abs(var - 2) < 0.04 && std::hypot(pr - 0.5, pi - 0.5) < 0.05;
    return Check{ok, Fmt("var", var)};
  });
  s.Run("complex-gaussian", "analytic KL closed form", [] {
    auto one = [](double v) { return at::full({1}, v, at::kDouble); };
    CGDParams p{one(1), one(0), one(2), one(0), one(0)};
    const double kl = KlAnalytic(p, StandardPriorLike(p)).item<double>();
    const double want = 2 - std::log(2.0);
    return Check{std::abs(kl - want) < 1e-12, Fmt("kl", kl)};
  });
  s.Run("complex-gaussian", "sampled KL within 3 stderr of analytic", [seed] {
    at::Generator gen = MakeGenerator(seed + 1);
    int bad = 0;
    for (int i = 0; i < 5; ++i) {
      auto raw = [] { return at::randn({1}, at::kDouble); };
      CGDParams p = MakeCgd(raw(), raw(), raw(), raw(), raw());
      CGDParams q = MakeCgd(raw(), raw(), raw(), raw(), raw());
      KlEstimate est = KlSampled(p, q, 20000, gen);
      const double exact = KlAnalytic(p, q).item<double>();
      if (std::abs(est.value.item<double>() - exact) > 3 * est.stderr_ + 1e-12) ++bad;
    }
    // Five independent 3-sigma checks: a single outlier is plausible noise.
    return Check{bad <= 1, Fmt("outside", bad)};
  });

  s.Run("complex-nn", "1x1 complex multiply", [] {
    ComplexConvOptions o;
    o.kernel = {1, 1};
    o.stride = {1, 1};
    o.padding = {0, 0};
    o.bias = false;
    ComplexConv2d conv(o);
    conv->to(at::kDouble);
    torch::NoGradGuard g;
    conv->weight_re.fill_(3);
    conv->weight_im.fill_(4);
    ComplexTensor y = conv->forward({at::full({1, 1, 1, 1}, 1.0, at::kDouble),
                                     at::full({1, 1, 1, 1}, 2.0, at::kDouble)});
    const double re = y.re.item<double>(), im = y.im.item<double>();
    return Check{re == -5 && im == 10, Fmt("re", re) + " " + Fmt("im", im)};
  });
  s.Run("complex-nn", "transposed conv is the adjoint", [] {
    ComplexConvOptions o;
    o.in_channels = 2;
    o.out_channels = 3;
    o.causal = false;
    o.padding = {2, 1};
    o.output_padding_freq = 1;
    ComplexConv2d conv(o);
    ComplexConvOptions ot = o;
    ot.in_channels = 3;
    ot.out_channels = 2;
    ot.bias = false;
    o.bias = false;
    ComplexConv2d conv_nb(o);
    ComplexConvTranspose2d convt(ot);
    conv_nb->to(at::kDouble);
    convt->to(at::kDouble);
    torch::NoGradGuard g;
    convt->weight_re.copy_(conv_nb->weight_re);
    convt->weight_im.copy_(conv_nb->weight_im);
    ComplexTensor x{at::randn({2, 2, 16, 5}, at::kDouble), at::randn({2, 2, 16, 5}, at::kDouble)};
    ComplexTensor ax = conv_nb->forward(x);
    ComplexTensor y{at::randn(ax.re.sizes(), at::kDouble), at::randn(ax.re.sizes(), at::kDouble)};
    ComplexTensor aty = convt->forward(y);
    // Bilinear pairing sum(a * b) without conjugation.
    auto pair = [](const ComplexTensor& a, const ComplexTensor& b) {
      return std::pair{(a.re * b.re - a.im * b.im).sum().item<double>(),
                       (a.re * b.im + a.im * b.re).sum().item<double>()};
    };
    auto [l_re, l_im] = pair(ax, y);
    auto [r_re, r_im] = pair(x, aty);
    const double err = std::hypot(l_re - r_re, l_im - r_im) / std::hypot(l_re, l_im);
    return Check{err < 1e-10, Fmt("rel_err", err)};
  });
  s.Run("complex-nn", "batch norm whitens", [] {
    ComplexBatchNorm bn(3);
    bn->to(at::kDouble);
    at::Tensor a = at::randn({8, 3, 10, 10}, at::kDouble) * 2;
    at::Tensor b = at::randn({8, 3, 10, 10}, at::kDouble) * 3;
    ComplexTensor y = bn->forward({a + 1, 0.8 * a + 0.6 * b - 2});
    double worst = 0;
    for (int c = 0; c < 3; ++c) {
      at::Tensor r = y.re.select(1, c), i = y.im.select(1, c);
      worst = std::max({worst, std::abs(r.mean().item<double>()),
                        std::abs(i.mean().item<double>()),
                        std::abs((r * r).mean().item<double>() - 1),
                        std::abs((i * i).mean().item<double>() - 1),
                        std::abs((r * i).mean().item<double>())});
    }
    return Check{worst < 1e-5, Fmt("max_dev", worst)};
  });
  s.Run("complex-nn", "conv rotation equivariance", [] {
    ComplexConvOptions o;
    o.in_channels = 2;
    o.out_channels = 2;
    o.bias = false;
    ComplexConv2d conv(o);
    conv->to(at::kDouble);
    torch::NoGradGuard g;
    ComplexTensor x{at::randn({1, 2, 8, 4}, at::kDouble), at::randn({1, 2, 8, 4}, at::kDouble)};
    const double phi = 0.7, c = std::cos(phi), sn = std::sin(phi);
    ComplexTensor y = conv->forward(x);
    ComplexTensor yr = conv->forward({c * x.re - sn * x.im, sn * x.re + c * x.im});
    const double err = std::max(RelL2(yr.re, c * y.re - sn * y.im), RelL2(yr.im, sn * y.re + c * y.im));
    return Check{err < 1e-12, Fmt("rel_err", err)};
  });

  s.Run("losses", "si_snr hand example", [] {
    at::Tensor ref = at::tensor({1.0, 0.0}, at::kDouble), est = at::tensor({1.0, 1.0}, at::kDouble);
    const double v = SiSnr(ref, est, {.zero_mean = false}).item<double>();
    return Check{std::abs(v) < 1e-12, Fmt("db", v)};
  });
  s.Run("losses", "si_snr scale invariance and cap", [] {
    at::Tensor ref = at::randn({4000}, at::kDouble);
    at::Tensor est = ref + 0.3 * at::randn({4000}, at::kDouble);
    const double a = SiSnr(ref, est).item<double>(), b = SiSnr(ref, 7.5 * est).item<double>();
    const double cap = SiSnr(ref, ref).item<double>();
    return Check{std::abs(a - b) < 1e-6 && std::abs(cap - 80) < 1e-6, Fmt("cap", cap)};
  });
  s.Run("losses", "latent loss recombines from components", [seed] {
    auto raw = [] { return at::randn({2, 3, 4}, at::kDouble); };
    CGDParams q = MakeCgd(raw(), raw(), raw(), raw(), raw());
    CGDParams px = MakeCgd(raw(), raw(), raw(), raw(), raw());
    CGDParams pd = MakeCgd(raw(), raw(), raw(), raw(), raw());
    SkipFeatureStack rx{{raw(), raw()}}, ryx{{raw(), raw()}};
    at::Generator gen = MakeGenerator(seed);
    LossBreakdown l = LatentLoss(q, px, pd, rx, ryx, 0.25, gen);
    const double rebuilt = l.value("kl_qy_px") - 0.25 * l.value("kl_qy_pd") + l.value("residual");
    return Check{rebuilt == l.total_value() || std::abs(rebuilt - l.total_value()) < 1e-12,
                 Fmt("diff", rebuilt - l.total_value())};
  });

  s.Run("data-mixing", "gain and realized SNR", [seed] {
    Waveform x = GenSyntheticSpeech(seed, 1.0), d = GenSyntheticNoise(NoiseKind::kPink, seed, 1.0);
    MixResult m = MixAtSnr(x, d, 5.0);
    const double realized = 10 * std::log10(ActivePower(m.clean.samples) / ActivePower(m.noise_scaled.samples));
    return Check{std::abs(realized - 5.0) < 0.01, Fmt("realized_db", realized)};
  });

  s.Run("evaluation", "stoi identity and scale", [seed] {
    Waveform x = GenSyntheticSpeech(seed, 2.0);
    Waveform scaled = x;
    for (float& v : scaled.samples) v *= 0.1f;
    const double a = Stoi(x, x), b = Stoi(x, scaled);
    return Check{a >= 0.999 && b >= 0.999, Fmt("self", a) + " " + Fmt("scaled", b)};
  });

  s.Run("checkpoint", "bitwise round trip", [] {
    ModelCheckpoint c;
    c.stage = "stage1";
    c.step = 42;
    c.arrays = {{"a", at::randn({3, 4})}, {"b", at::randn({5}, at::kDouble)},
                {"c", at::arange(7, at::kLong)}};
    const auto path = (std::filesystem::temp_directory_path() / "dccrn_vae_selftest.ckpt").string();
    SaveCheckpoint(c, path);
    ModelCheckpoint back = LoadCheckpoint(path);
    std::filesystem::remove(path);
    return Check{CheckpointsEqual(c, back), ""};
  });

  return s.Take();
}

SuiteReport RunGradCheckSuite(double max_rel_error, const GradCheckOptions& options) {
  torch::manual_seed(11);
  Suite s;
  auto judge = [max_rel_error](const GradCheckResult& r) {
    std::ostringstream os;
    os << "max_rel_err=" << r.max_rel_error << " checked=" << r.checked
       << " skipped=" << r.skipped << " worst=" << r.worst;
    return Check{r.checked > 0 && r.max_rel_error < max_rel_error, os.str()};
  };

  s.Run("layers", "complex_conv2d", [&] {
    ComplexConvOptions o;
    o.in_channels = 2;
    o.out_channels = 3;
    ComplexConv2d m(o);
    m->to(at::kDouble);
    ComplexTensor x = RandomComplex({2, 2, 16, 5});
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 1); }, p, options));
  });
  s.Run("layers", "complex_conv_transpose2d", [&] {
    ComplexConvOptions o;
    o.in_channels = 3;
    o.out_channels = 2;
    ComplexConvTranspose2d m(o);
    m->to(at::kDouble);
    ComplexTensor x = RandomComplex({2, 3, 8, 5});
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 2); }, p, options));
  });
  s.Run("layers", "complex_batch_norm (train)", [&] {
    ComplexBatchNorm m(3);
    m->to(at::kDouble);
    {
      torch::NoGradGuard g;
      m->gamma_ri.fill_(0.3);
      m->beta_re.fill_(0.1);
    }
    ComplexTensor x = RandomComplex({4, 3, 6, 5});
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 3); }, p, options));
  });
  s.Run("layers", "prelu (away from the kink)", [&] {
    ComplexPReLU m(3);
    m->to(at::kDouble);
    auto away = [](at::IntArrayRef shape) {
      at::Tensor t = at::randn(shape, at::kDouble);
      return (t + 0.2 * at::sign(t)).requires_grad_();
    };
    ComplexTensor x{away({2, 3, 4, 4}), away({2, 3, 4, 4})};
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 4); }, p, options));
  });
  s.Run("layers", "complex_lstm", [&] {
    ComplexLstm m(6, 4);
    m->to(at::kDouble);
    ComplexTensor x = RandomComplex({2, 5, 6});
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 5); }, p, options));
  });
  s.Run("layers", "real_lstm", [&] {
    RealLstm m(6, 1);
    m->to(at::kDouble);
    at::Tensor x = at::randn({2, 5, 6}, at::kDouble).requires_grad_();
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x", x);
    return judge(GradCheck(
        [&] { return (m->forward(x) * ProbeWeights({2, 5, 1}, 6)).sum(); }, p, options));
  });
  s.Run("layers", "complex_linear", [&] {
    ComplexLinear m(5, 3);
    m->to(at::kDouble);
    ComplexTensor x = RandomComplex({2, 4, 5});
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("x.re", x.re);
    p.emplace_back("x.im", x.im);
    return judge(GradCheck([&] { return Probe(m->forward(x), 7); }, p, options));
  });

  // Full desk-profile networks; a few elements per tensor keep this fast.
  GradCheckOptions sub = options;
  if (sub.max_elements_per_tensor <= 0) sub.max_elements_per_tensor = 4;
  const ModelConfig cfg = ModelConfig::Desk();
  const int64_t bins = cfg.stft.num_bins(), frames = 6;
  auto random_spec = [&] {
    return ComplexSpectrogram{at::randn({2, bins, frames}, at::kDouble).requires_grad_(),
                              at::randn({2, bins, frames}, at::kDouble).requires_grad_(),
                              cfg.stft};
  };

  s.Run("models", "encoder", [&] {
    Encoder m(cfg);
    m->to(at::kDouble);
    ComplexSpectrogram spec = random_spec();
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("spec.re", spec.real);
    p.emplace_back("spec.im", spec.imag);
    auto fn = [&] {
      EncoderOutput out = m->forward(spec);
      const CGDParams& q = out.posterior;
      at::Tensor v = (q.mu_re * ProbeWeights(q.mu_re.sizes(), 8)).sum() +
                     (q.mu_im * ProbeWeights(q.mu_im.sizes(), 9)).sum() +
                     (q.sigma * ProbeWeights(q.sigma.sizes(), 10)).sum() +
                     (q.delta_re * ProbeWeights(q.delta_re.sizes(), 11)).sum() +
                     (q.delta_im * ProbeWeights(q.delta_im.sizes(), 12)).sum();
      for (std::size_t l = 0; l < out.skips.size(); ++l) v = v + Probe(out.skips[l], 20 + 2 * l);
      return v;
    };
    return judge(GradCheck(fn, p, sub));
  });
  s.Run("models", "decoder", [&] {
    Decoder m(cfg);
    m->to(at::kDouble);
    LatentSample z{at::randn({2, cfg.latent_dim, frames}, at::kDouble).requires_grad_(),
                   at::randn({2, cfg.latent_dim, frames}, at::kDouble).requires_grad_()};
    SkipFeatureStack skips;
    int64_t f = cfg.freq_bins();
    for (int64_t l = 0; l < cfg.levels(); ++l) {
      f /= cfg.stride[0];
      skips.push_back(RandomComplex({2, cfg.channels[l], f, frames}));
    }
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("z.re", z.re);
    p.emplace_back("z.im", z.im);
    for (std::size_t l = 0; l < skips.size(); ++l) {
      p.emplace_back("skip" + std::to_string(l) + ".re", skips[l].re);
      p.emplace_back("skip" + std::to_string(l) + ".im", skips[l].im);
    }
    auto fn = [&] {
      ComplexSpectrogram out = m->forward(z, skips);
      return Probe({out.real, out.imag}, 40);
    };
    return judge(GradCheck(fn, p, sub));
  });
  s.Run("models", "discriminator", [&] {
    Discriminator m(cfg);
    m->to(at::kDouble);
    ComplexSpectrogram spec = random_spec();
    NamedTensors p = Leaves(*m, "");
    p.emplace_back("spec.re", spec.real);
    p.emplace_back("spec.im", spec.imag);
    return judge(GradCheck([&] { return (m->forward(spec) * ProbeWeights({2}, 50)).sum(); },
                           p, sub));
  });
  return s.Take();
}

}  // namespace dvae
