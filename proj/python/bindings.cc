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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <ATen/ATen.h>

#include <complex>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "dccrn_vae/complex_gaussian.h"
#include "dccrn_vae/data.h"
#include "dccrn_vae/evaluation.h"
#include "dccrn_vae/losses.h"
#include "dccrn_vae/models.h"
#include "dccrn_vae/stft.h"
#include "dccrn_vae/stoi.h"
#include "dccrn_vae/training.h"
#include "dccrn_vae/verification.h"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray =
    py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

std::vector<double> ToVector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

dvae::Waveform ToWave(const Array& a, int sample_rate) {
  auto v = ToVector(a);
  return {std::vector<float>(v.begin(), v.end()), sample_rate};
}

py::array_t<float> FromWave(const dvae::Waveform& w) {
  py::array_t<float> out(static_cast<py::ssize_t>(w.size()));
  std::memcpy(out.mutable_data(), w.samples.data(), w.size() * sizeof(float));
  return out;
}

dvae::StftConfig StftFor(const std::string& profile) {
  return dvae::ModelConfig::ForProfile(dvae::ParseProfile(profile)).stft;
}

ComplexArray Stft(const Array& samples, const std::string& profile) {
  const auto v = ToVector(samples);
  at::Tensor x = at::tensor(v, at::kDouble);
  auto spec = dvae::ConvStft(StftFor(profile), at::kDouble).Analyze(x);
  at::Tensor c = at::complex(spec.real, spec.imag).contiguous();
  ComplexArray out({c.size(0), c.size(1)});
  std::memcpy(out.mutable_data(), c.data_ptr(), c.numel() * sizeof(std::complex<double>));
  return out;
}

py::array_t<double> Istft(const ComplexArray& spec, int64_t length, const std::string& profile) {
  if (spec.ndim() != 2) throw std::invalid_argument("expected a (bins, frames) array");
  at::Tensor c = at::empty({spec.shape(0), spec.shape(1)}, at::kComplexDouble);
  std::memcpy(c.data_ptr(), spec.data(), spec.size() * sizeof(std::complex<double>));
  const auto cfg = StftFor(profile);
  dvae::ComplexSpectrogram s{at::real(c).contiguous(), at::imag(c).contiguous(), cfg};
  at::Tensor y = dvae::ConvStft(cfg, at::kDouble).Synthesize(s, length).contiguous();
  py::array_t<double> out(length);
  std::memcpy(out.mutable_data(), y.data_ptr<double>(), length * sizeof(double));
  return out;
}

dvae::CGDParams Cgd(std::complex<double> mu, double sigma, std::complex<double> delta) {
  auto s = [](double v) { return at::full({1}, v, at::kDouble); };
  return {s(mu.real()), s(mu.imag()), s(sigma), s(delta.real()), s(delta.imag())};
}

py::dict SuiteToDict(const dvae::SuiteReport& r) {
  py::dict counts;
  for (const auto& [family, pt] : r.Counts()) counts[py::str(family)] = py::make_tuple(pt.first, pt.second);
  py::list checks;
  for (const auto& c : r.checks) {
    checks.append(py::dict(py::arg("family") = c.family, py::arg("name") = c.name,
                           py::arg("passed") = c.passed, py::arg("detail") = c.detail));
  }
  return py::dict(py::arg("passed") = r.AllPassed(), py::arg("counts") = counts,
                  py::arg("checks") = checks);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Complex-valued VAE speech enhancement core";

  m.def("stft", &Stft, py::arg("samples"), py::arg("profile") = "desk",
        "Convolutional STFT of a 1-D signal; returns a (bins, frames) complex array.");
  m.def("istft", &Istft, py::arg("spec"), py::arg("length"), py::arg("profile") = "desk");

  m.def("si_snr",
        [](const Array& ref, const Array& est, bool zero_mean) {
          dvae::SiSnrOptions o;
          o.zero_mean = zero_mean;
          return dvae::SiSnr(at::tensor(ToVector(ref), at::kDouble),
                             at::tensor(ToVector(est), at::kDouble), o)
              .item<double>();
        },
        py::arg("ref"), py::arg("est"), py::arg("zero_mean") = true);
  m.def("stoi",
        [](const Array& ref, const Array& est, int sample_rate) {
          return dvae::Stoi(ToVector(ref), ToVector(est), sample_rate);
        },
        py::arg("ref"), py::arg("est"), py::arg("sample_rate") = 16000);
  m.def("third_octave_bands", &dvae::ThirdOctaveBands);

  m.def("kl_analytic",
        [](std::complex<double> mu_p, double sigma_p, std::complex<double> delta_p,
           std::complex<double> mu_q, double sigma_q, std::complex<double> delta_q) {
          return dvae::KlAnalytic(Cgd(mu_p, sigma_p, delta_p), Cgd(mu_q, sigma_q, delta_q))
              .item<double>();
        },
        py::arg("mu_p"), py::arg("sigma_p"), py::arg("delta_p"), py::arg("mu_q"),
        py::arg("sigma_q"), py::arg("delta_q"));
  m.def("sample_cgd",
        [](std::complex<double> mu, double sigma, std::complex<double> delta, int64_t n,
           uint64_t seed) {
          auto p = Cgd(mu, sigma, delta);
          for (at::Tensor* t : {&p.mu_re, &p.mu_im, &p.sigma, &p.delta_re, &p.delta_im}) {
            *t = t->expand({n}).contiguous();
          }
          auto gen = dvae::MakeGenerator(seed);
          auto z = dvae::SampleCgd(p, gen);
          at::Tensor c = at::complex(z.re, z.im).contiguous();
          ComplexArray out(n);
          std::memcpy(out.mutable_data(), c.data_ptr(), n * sizeof(std::complex<double>));
          return out;
        },
        py::arg("mu"), py::arg("sigma"), py::arg("delta"), py::arg("n"), py::arg("seed") = 0);

  m.def("gen_speech",
        [](uint64_t seed, double duration_s) { return FromWave(dvae::GenSyntheticSpeech(seed, duration_s)); },
        py::arg("seed"), py::arg("duration_s"));
  m.def("gen_noise",
        [](const std::string& kind, uint64_t seed, double duration_s) {
          return FromWave(dvae::GenSyntheticNoise(dvae::ParseNoiseKind(kind), seed, duration_s));
        },
        py::arg("kind"), py::arg("seed"), py::arg("duration_s"));
  m.def("mix_at_snr",
        [](const Array& clean, const Array& noise, double snr_db) {
          auto r = dvae::MixAtSnr(ToWave(clean, 16000), ToWave(noise, 16000), snr_db);
          return py::dict(py::arg("noisy") = FromWave(r.noisy), py::arg("clean") = FromWave(r.clean),
                          py::arg("noise") = FromWave(r.noise_scaled), py::arg("gain") = r.gain,
                          py::arg("rescale") = r.rescale);
        },
        py::arg("clean"), py::arg("noise"), py::arg("snr_db"));
  m.def("build_dataset",
        [](const std::string& out_dir, int num, double duration_s, uint64_t seed) {
          dvae::DatasetConfig c;
          c.out_dir = out_dir;
          c.num_utterances = num;
          c.duration_s = duration_s;
          c.seed = seed;
          return dvae::BuildDataset(c).records.size();
        },
        py::arg("out_dir"), py::arg("num") = 100, py::arg("duration_s") = 2.0,
        py::arg("seed") = 1234);

  m.def("enhance",
        [](const Array& noisy, const std::string& ckpt, std::optional<Array> clean) {
          auto enhancer = dvae::Enhancer::FromFile(ckpt);
          const auto y = ToWave(noisy, 16000);
          if (clean) {
            const auto x = ToWave(*clean, 16000);
            return FromWave(enhancer.Enhance(y, dvae::EnhanceMode::kOracle, &x));
          }
          return FromWave(enhancer.Enhance(y));
        },
        py::arg("noisy"), py::arg("checkpoint"), py::arg("clean") = py::none(),
        "Enhances with a stage-2/3 checkpoint; passing `clean` selects oracle mode.");

  m.def("self_test", [](uint64_t seed) { return SuiteToDict(dvae::RunSelfTest(seed)); },
        py::arg("seed") = 7);
}
