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

#include "dccrn_vae/evaluation.h"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "dccrn_vae/losses.h"
#include "dccrn_vae/stoi.h"

namespace dvae {

EvalRow EvalReport::Mean() const {
  EvalRow m;
  m.id = "mean";
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.snr_db += r.snr_db;
    m.si_sdr_noisy += r.si_sdr_noisy;
    m.si_sdr_enhanced += r.si_sdr_enhanced;
    m.stoi_noisy += r.stoi_noisy;
    m.stoi_enhanced += r.stoi_enhanced;
  }
  const double n = static_cast<double>(rows.size());
  m.snr_db /= n;
  m.si_sdr_noisy /= n;
  m.si_sdr_enhanced /= n;
  m.stoi_noisy /= n;
  m.stoi_enhanced /= n;
  return m;
}

void EvalReport::WriteCsv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  os << kEvalCsvHeader << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.id << ',' << r.snr_db << ',' << r.si_sdr_noisy << ','
       << r.si_sdr_enhanced << ',' << r.stoi_noisy << ',' << r.stoi_enhanced << '\n';
  }
}

nlohmann::json EvalReport::AggregateJson() const {
  const EvalRow m = Mean();
  return {{"count", rows.size()},
          {"snr_db", m.snr_db},
          {"si_sdr_noisy", m.si_sdr_noisy},
          {"si_sdr_enhanced", m.si_sdr_enhanced},
          {"stoi_noisy", m.stoi_noisy},
          {"stoi_enhanced", m.stoi_enhanced}};
}

void EvalReport::WriteJson(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  os << AggregateJson().dump(2) << '\n';
}

EvalReport EvaluateCorpus(const MixManifest& manifest, const EnhanceFn& enhance,
                          const std::string& split) {
  const auto records = split == "all" ? manifest.records : manifest.Split(split);
  if (records.empty()) throw std::invalid_argument("no records in split '" + split + "'");
  EvalReport report;
  for (const auto& rec : records) {
    Waveform x = LoadWav(manifest.Resolve(rec.clean));
    Waveform d = LoadWav(manifest.Resolve(rec.noise));
    const std::size_t n = std::min(x.size(), d.size());
    x.samples.resize(n);
    d.samples.resize(n);
    MixResult mix = MixAtSnr(x, d, rec.snr_db);
    Waveform e = enhance(mix.noisy, mix.clean);
    if (e.size() != mix.noisy.size()) {
      throw std::runtime_error("enhancer changed the signal length for " + rec.clean);
    }
    EvalRow row;
    row.id = rec.clean;
    row.snr_db = rec.snr_db;
    row.si_sdr_noisy = SiSnr(mix.clean, mix.noisy);
    row.si_sdr_enhanced = SiSnr(mix.clean, e);
    row.stoi_noisy = Stoi(mix.clean, mix.noisy);
    row.stoi_enhanced = Stoi(mix.clean, e);
    report.rows.push_back(row);
  }
  return report;
}

EvalReport EvaluateCorpus(const MixManifest& manifest, const std::string& ckpt_path,
                          EnhanceMode mode, const std::string& split) {
  Enhancer enhancer = Enhancer::FromFile(ckpt_path);
  return EvaluateCorpus(
      manifest,
      [&](const Waveform& noisy, const Waveform& clean) {
        return enhancer.Enhance(noisy, mode, &clean);
      },
      split);
}

}  // namespace dvae
