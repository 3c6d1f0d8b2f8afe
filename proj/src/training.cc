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

#include "dccrn_vae/training.h"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace dvae {

namespace fs = std::filesystem;

namespace {

// Optimizer roles per stage; each role owns one Adam instance and one
// gradient-clipping domain.
const std::vector<std::pair<std::string, std::vector<std::string>>>& Roles(
    int stage) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>>
      s1 = {{"cvae", {kCleanEncoder, kCleanDecoder}},
            {"nvae", {kNoiseEncoder, kNoiseDecoder}}},
      s2 = {{"nsvae", {kNoisyEncoder}}},
      s3 = {{"disc", {kDiscriminator}}, {"generator", {kCleanDecoder}}};
  switch (stage) {
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
    default:
      throw std::invalid_argument("unknown training stage " + std::to_string(stage));
  }
}

std::vector<at::Tensor> RoleParameters(DccrnVae& model, int stage,
                                       const std::string& role) {
  std::vector<at::Tensor> out;
  for (const auto& [name, groups] : Roles(stage)) {
    if (name != role) continue;
    for (const auto& g : groups) {
      for (auto& [key, t] : model->GroupTensors(g, /*include_buffers=*/false)) {
        out.push_back(t);
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, at::Tensor>> RoleNamedParameters(
    DccrnVae& model, int stage, const std::string& role) {
  std::vector<std::pair<std::string, at::Tensor>> out;
  for (const auto& [name, groups] : Roles(stage)) {
    if (name != role) continue;
    for (const auto& g : groups) {
      for (auto& item : model->GroupTensors(g, false)) out.push_back(item);
    }
  }
  return out;
}

std::string ShapeString(at::IntArrayRef s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

void CopyWeights(DccrnVae& model, const ModelCheckpoint& ckpt) {
  torch::NoGradGuard no_grad;
  auto copy = [&](const std::string& name, at::Tensor& dst) {
    const std::string key = "model." + name;
    const at::Tensor* src = ckpt.Find(key);
    if (src == nullptr) throw ShapeMismatchError(key, "missing from checkpoint");
    if (!src->sizes().equals(dst.sizes())) {
      throw ShapeMismatchError(key, "expected shape " + ShapeString(dst.sizes()) +
                                        ", checkpoint has " +
                                        ShapeString(src->sizes()));
    }
    dst.copy_(*src);
  };
  for (auto& item : model->named_parameters(true)) copy(item.key(), item.value());
  for (auto& item : model->named_buffers(true)) copy(item.key(), item.value());
}

ModelConfig ModelConfigOf(const ModelCheckpoint& ckpt) {
  if (!ckpt.config.contains("model")) {
    throw std::runtime_error("checkpoint has no model config");
  }
  return ModelConfigFromJson(ckpt.config.at("model"));
}

at::Tensor Stack(const std::vector<std::vector<float>>& rows) {
  const int64_t n = static_cast<int64_t>(rows.front().size());
  at::Tensor out = at::empty({static_cast<int64_t>(rows.size()), n}, at::kFloat);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    std::copy(rows[b].begin(), rows[b].end(), out[b].data_ptr<float>());
  }
  return out;
}

ComplexSpectrogram DetachSpec(const ComplexSpectrogram& s) {
  return {s.real.detach(), s.imag.detach(), s.config};
}

}  // namespace

TrainingSet LoadTrainingSet(const MixManifest& manifest, const std::string& split) {
  TrainingSet set;
  const auto records = split == "all" ? manifest.records : manifest.Split(split);
  for (const auto& r : records) {
    Waveform x = LoadWav(manifest.Resolve(r.clean));
    Waveform d = LoadWav(manifest.Resolve(r.noise));
    if (x.sample_rate != d.sample_rate) {
      throw std::runtime_error("sample rate mismatch between " + r.clean + " and " + r.noise);
    }
    const std::size_t n = std::min(x.size(), d.size());
    x.samples.resize(n);
    d.samples.resize(n);
    set.ids.push_back(r.clean);
    set.clean.push_back(std::move(x));
    set.noise.push_back(std::move(d));
  }
  return set;
}

std::vector<std::string> TrainableGroups(int stage) {
  std::vector<std::string> out;
  for (const auto& [role, groups] : Roles(stage)) {
    out.insert(out.end(), groups.begin(), groups.end());
  }
  return out;
}

Trainer::Trainer(const TrainConfig& config, TrainingSet data)
    : config_(config),
      model_config_(ModelConfig::ForProfile(config.profile)),
      data_(std::move(data)),
      gen_(MakeGenerator(config.seed + 1)),
      data_rng_(config.seed + 2) {
  config_.Validate();
  if (data_.size() == 0) throw std::invalid_argument("empty training corpus");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_.clean[i].sample_rate != 16000) {
      throw std::invalid_argument("training audio must be 16 kHz: " + data_.ids[i]);
    }
    if (static_cast<int64_t>(data_.clean[i].size()) < model_config_.stft.frame_len) {
      throw std::invalid_argument("training utterance shorter than one frame: " +
                                  data_.ids[i]);
    }
  }
  torch::manual_seed(config_.seed);
  model_ = DccrnVae(model_config_);
  stft_ = std::make_unique<ConvStft>(model_config_.stft, at::kFloat);
}

void Trainer::SetModes() {
  model_->train();
  const auto trainable = TrainableGroups(stage_);
  for (const auto& g : ParameterGroups()) {
    if (std::find(trainable.begin(), trainable.end(), g) == trainable.end()) {
      model_->Group(g).eval();
    }
  }
}

void Trainer::BeginStage(int stage) {
  Roles(stage);  // validates
  stage_ = stage;
  step_ = 0;
  for (auto& p : model_->parameters()) {
    p.set_requires_grad(false);
    p.mutable_grad() = at::Tensor();
  }
  optimizers_.clear();
  for (const auto& [role, groups] : Roles(stage)) {
    auto params = RoleParameters(model_, stage, role);
    for (auto& p : params) p.set_requires_grad(true);
    optimizers_[role] = std::make_unique<torch::optim::Adam>(
        params, torch::optim::AdamOptions(config_.lr));
  }
  SetModes();
}

Trainer::Batch Trainer::DrawBatch() {
  const int sr = data_.clean.front().sample_rate;
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::uniform_real_distribution<double> snr(config_.snr_min_db, config_.snr_max_db);
  int64_t crop = std::llround(config_.crop_seconds * sr);
  for (const auto& x : data_.clean) crop = std::min<int64_t>(crop, x.size());
  std::vector<std::vector<float>> xs, ds, ys;
  for (int64_t b = 0; b < config_.batch_size; ++b) {
    const std::size_t i = pick(data_rng_);
    MixResult mix = MixAtSnr(data_.clean[i], data_.noise[i], snr(data_rng_));
    const auto& x = mix.clean.samples;
    const int64_t n = static_cast<int64_t>(x.size());
    double total = 0;
    for (float v : x) total += double(v) * v;
    std::uniform_int_distribution<int64_t> start(0, n - crop);
    int64_t s = start(data_rng_);
    // Avoid crops that fall almost entirely into a pause.
    for (int attempt = 0; attempt < 8; ++attempt) {
      double e = 0;
      for (int64_t k = s; k < s + crop; ++k) e += double(x[k]) * x[k];
      if (e >= 1e-2 * total * crop / n) break;
      s = start(data_rng_);
    }
    auto slice = [&](const std::vector<float>& v) {
      return std::vector<float>(v.begin() + s, v.begin() + s + crop);
    };
    xs.push_back(slice(mix.clean.samples));
    ds.push_back(slice(mix.noise_scaled.samples));
    ys.push_back(slice(mix.noisy.samples));
  }
  return {Stack(xs), Stack(ds), Stack(ys)};
}

void Trainer::ApplyUpdate(const std::string& role, const at::Tensor& loss) {
  auto& opt = *optimizers_.at(role);
  opt.zero_grad();
  loss.backward();
  auto params = RoleParameters(model_, stage_, role);
  torch::nn::utils::clip_grad_norm_(params, config_.grad_clip);
  opt.step();
}

void Trainer::CheckFinite(const LossBreakdown& loss, const std::string& what) {
  bool finite = std::isfinite(loss.total_value());
  for (const auto& [name, v] : loss.components) {
    finite = finite && std::isfinite(v.item<double>());
  }
  if (finite) return;
  std::ostringstream detail;
  detail << "total=" << loss.total_value();
  for (const auto& [name, v] : loss.components) detail << ' ' << name << '=' << v.item<double>();
  FailNonFinite(what, detail.str());
}

void Trainer::FailNonFinite(const std::string& what, const std::string& detail) {
  std::ostringstream msg;
  msg << "non-finite loss in stage " << stage_ << " step " << step_ << " (" << what
      << "): " << detail;
  try {
    fs::create_directories(config_.ckpt_dir);
    const std::string dump = (fs::path(config_.ckpt_dir) / "nonfinite_dump.ckpt").string();
    SaveCheckpoint(Snapshot(), dump);
    msg << "; state dumped to " << dump;
  } catch (const std::exception& e) {
    msg << "; state dump failed: " << e.what();
  }
  throw NonFiniteLossError(msg.str());
}

std::map<std::string, LossBreakdown> Trainer::StepStage1() {
  Batch batch = DrawBatch();
  std::map<std::string, LossBreakdown> out;
  auto run = [&](const std::string& role, Vae& vae, const at::Tensor& target) {
    LossBreakdown loss;
    try {
      EncoderOutput enc = vae->encoder->forward(stft_->Analyze(target));
      LatentSample z = SampleCgd(enc.posterior, gen_);
      at::Tensor recon = stft_->Synthesize(vae->decoder->forward(z, enc.skips),
                                           target.size(1));
      loss = Stage1Loss(enc.posterior, recon, target, gen_, config_.kl_samples);
    } catch (const NonFiniteParamsError& e) {
      FailNonFinite(role, e.what());
    }
    CheckFinite(loss, role);
    ApplyUpdate(role, loss.total);
    out[role] = std::move(loss);
  };
  run("cvae", model_->cvae, batch.clean);
  run("nvae", model_->nvae, batch.noise);
  return out;
}

std::map<std::string, LossBreakdown> Trainer::StepStage2() {
  Batch batch = DrawBatch();
  EncoderOutput px, pd;
  {
    torch::NoGradGuard no_grad;
    px = model_->EncodeClean(stft_->Analyze(batch.clean));
    pd = model_->EncodeNoise(stft_->Analyze(batch.noise));
  }
  EncoderOutput qy = model_->EncodeNoisy(stft_->Analyze(batch.noisy));
  LossBreakdown loss;
  try {
    loss = LatentLoss(qy.posterior, px.posterior, pd.posterior, px.skips, qy.skips,
                      config_.alpha, gen_, config_.kl_samples);
  } catch (const NonFiniteParamsError& e) {
    FailNonFinite("nsvae", e.what());
  }
  CheckFinite(loss, "nsvae");
  ApplyUpdate("nsvae", loss.total);
  return {{"nsvae", std::move(loss)}};
}

std::map<std::string, LossBreakdown> Trainer::StepStage3() {
  Batch batch = DrawBatch();
  EncoderOutput qy;
  LatentSample z;
  {
    torch::NoGradGuard no_grad;
    qy = model_->EncodeNoisy(stft_->Analyze(batch.noisy));
    try {
      z = SampleCgd(qy.posterior, gen_);
    } catch (const NonFiniteParamsError& e) {
      FailNonFinite("generator", e.what());
    }
  }
  const int64_t n = batch.clean.size(1);
  at::Tensor recon = stft_->Synthesize(model_->DecodeClean(z, qy.skips), n);
  // The discriminator sees consistent spectrograms on both sides.
  ComplexSpectrogram fake = stft_->Analyze(recon);
  ComplexSpectrogram real = stft_->Analyze(batch.clean);

  LossBreakdown d_loss = GanDiscriminatorLoss(model_->Discriminate(DetachSpec(fake)),
                                              model_->Discriminate(real));
  CheckFinite(d_loss, "disc");
  ApplyUpdate("disc", d_loss.total);
  ++discriminator_updates_;

  LossBreakdown g_loss = GanGeneratorLoss(model_->Discriminate(fake), recon, batch.clean);
  CheckFinite(g_loss, "generator");
  ApplyUpdate("generator", g_loss.total);
  ++generator_updates_;
  return {{"disc", std::move(d_loss)}, {"generator", std::move(g_loss)}};
}

std::map<std::string, LossBreakdown> Trainer::Step() {
  std::map<std::string, LossBreakdown> out;
  switch (stage_) {
    case 1: out = StepStage1(); break;
    case 2: out = StepStage2(); break;
    case 3: out = StepStage3(); break;
    default: throw std::logic_error("Step() called before BeginStage()");
  }
  ++step_;
  return out;
}

double Trainer::GroupGradNormSq(const std::string& group) {
  double total = 0;
  for (auto& [name, p] : model_->GroupTensors(group, false)) {
    if (p.grad().defined()) total += p.grad().pow(2).sum().item<double>();
  }
  return total;
}

ModelCheckpoint Trainer::Snapshot() const {
  ModelCheckpoint ckpt;
  ckpt.stage = stage_ > 0 ? "stage" + std::to_string(stage_) : "init";
  ckpt.step = step_;
  ckpt.config = {{"train", config_.ToJson()}, {"model", ModelConfigToJson(model_config_)}};
  for (const auto& item : model_->named_parameters(true)) {
    ckpt.arrays.emplace_back("model." + item.key(), item.value().detach().clone());
  }
  for (const auto& item : model_->named_buffers(true)) {
    ckpt.arrays.emplace_back("model." + item.key(), item.value().detach().clone());
  }
  if (stage_ > 0) {
    auto& model = const_cast<DccrnVae&>(model_);
    for (const auto& [role, opt] : optimizers_) {
      for (const auto& [name, p] : RoleNamedParameters(model, stage_, role)) {
        auto it = opt->state().find(p.unsafeGetTensorImpl());
        if (it == opt->state().end()) continue;
        const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
        const std::string base = "optim." + role + "." + name;
        ckpt.arrays.emplace_back(base + ".step", at::full({1}, st.step(), at::kLong));
        ckpt.arrays.emplace_back(base + ".exp_avg", st.exp_avg().clone());
        ckpt.arrays.emplace_back(base + ".exp_avg_sq", st.exp_avg_sq().clone());
      }
    }
  }
  at::Generator gen = gen_;
  {
    std::lock_guard<std::mutex> lock(gen.mutex());
    ckpt.arrays.emplace_back("rng.latent", gen.get_state());
  }
  std::ostringstream rng;
  rng << data_rng_;
  ckpt.meta = {{"active_stage", stage_},
               {"data_rng", rng.str()},
               {"generator_updates", generator_updates_},
               {"discriminator_updates", discriminator_updates_}};
  return ckpt;
}

void Trainer::LoadWeights(const ModelCheckpoint& ckpt) { CopyWeights(model_, ckpt); }

void Trainer::Restore(const ModelCheckpoint& ckpt) {
  LoadWeights(ckpt);
  const int stage = ckpt.meta.value("active_stage", 0);
  if (stage > 0) {
    BeginStage(stage);
    step_ = ckpt.step;
    for (const auto& [role, opt] : optimizers_) {
      for (const auto& [name, p] : RoleNamedParameters(model_, stage_, role)) {
        const std::string base = "optim." + role + "." + name;
        const at::Tensor* step = ckpt.Find(base + ".step");
        if (step == nullptr) continue;
        auto st = std::make_unique<torch::optim::AdamParamState>();
        st->step(step->item<int64_t>());
        st->exp_avg(ckpt.At(base + ".exp_avg").clone());
        st->exp_avg_sq(ckpt.At(base + ".exp_avg_sq").clone());
        opt->state()[p.unsafeGetTensorImpl()] = std::move(st);
      }
    }
  }
  if (const at::Tensor* state = ckpt.Find("rng.latent")) {
    std::lock_guard<std::mutex> lock(gen_.mutex());
    gen_.set_state(*state);
  }
  if (ckpt.meta.contains("data_rng")) {
    std::istringstream is(ckpt.meta.at("data_rng").get<std::string>());
    is >> data_rng_;
  }
  generator_updates_ = ckpt.meta.value("generator_updates", int64_t{0});
  discriminator_updates_ = ckpt.meta.value("discriminator_updates", int64_t{0});
}

std::string StageCheckpointPath(const std::string& ckpt_dir, int stage) {
  return (fs::path(ckpt_dir) / ("stage" + std::to_string(stage) + ".ckpt")).string();
}

StageReport RunStage(Trainer& trainer, int stage, int64_t steps,
                     const StepCallback& callback) {
  const TrainConfig& cfg = trainer.config();
  fs::create_directories(cfg.ckpt_dir);
  const std::string log_path =
      cfg.log_csv.empty() ? (fs::path(cfg.ckpt_dir) / "loss.csv").string() : cfg.log_csv;
  LossLog log(log_path);
  const std::string tag = "stage" + std::to_string(stage);

  StageReport report;
  report.stage = stage;
  trainer.BeginStage(stage);
  for (int64_t i = 0; i < steps; ++i) {
    auto losses = trainer.Step();
    for (const auto& [role, loss] : losses) {
      log.Write(trainer.step(), tag + "." + role, loss);
      report.curves[role + ".total"].push_back(loss.total_value());
      for (const auto& [name, v] : loss.components) {
        report.curves[role + "." + name].push_back(v.item<double>());
      }
    }
    report.steps = trainer.step();
    if (cfg.checkpoint_every > 0 && trainer.step() % cfg.checkpoint_every == 0) {
      SaveCheckpoint(trainer.Snapshot(),
                     (fs::path(cfg.ckpt_dir) / (tag + "_latest.ckpt")).string());
    }
    if (callback && !callback(trainer, losses)) break;
  }
  report.checkpoint_path = StageCheckpointPath(cfg.ckpt_dir, stage);
  SaveCheckpoint(trainer.Snapshot(), report.checkpoint_path);
  return report;
}

namespace {

void LoadPreviousStage(Trainer& trainer, int stage) {
  const std::string path = StageCheckpointPath(trainer.config().ckpt_dir, stage - 1);
  if (!fs::exists(path)) {
    throw MissingCheckpointError("missing stage-" + std::to_string(stage - 1) +
                                 " checkpoint: " + path);
  }
  trainer.LoadWeights(LoadCheckpoint(path));
}

}  // namespace

StageReport RunStage1(Trainer& trainer, const StepCallback& callback) {
  return RunStage(trainer, 1, trainer.config().StepsFor(1), callback);
}

StageReport RunStage2(Trainer& trainer, const StepCallback& callback) {
  LoadPreviousStage(trainer, 2);
  return RunStage(trainer, 2, trainer.config().StepsFor(2), callback);
}

StageReport RunStage3(Trainer& trainer, const StepCallback& callback) {
  LoadPreviousStage(trainer, 3);
  return RunStage(trainer, 3, trainer.config().StepsFor(3), callback);
}

Enhancer::Enhancer(const ModelCheckpoint& ckpt) : model_config_(ModelConfigOf(ckpt)) {
  if (ckpt.meta.value("active_stage", 0) < 2) {
    throw std::invalid_argument("enhance needs a stage-2 or stage-3 checkpoint, got '" +
                                ckpt.stage + "'");
  }
  model_ = DccrnVae(model_config_);
  CopyWeights(model_, ckpt);
  model_->eval();
  stft_ = std::make_unique<ConvStft>(model_config_.stft, at::kFloat);
}

Enhancer Enhancer::FromFile(const std::string& path) {
  return Enhancer(LoadCheckpoint(path));
}

Waveform Enhancer::Enhance(const Waveform& noisy, EnhanceMode mode,
                           const Waveform* clean) {
  ValidateWaveform(noisy);
  if (noisy.sample_rate != 16000) {
    throw std::invalid_argument("enhance expects 16 kHz input");
  }
  if (mode == EnhanceMode::kOracle) {
    if (clean == nullptr) {
      throw std::invalid_argument("oracle mode requires a clean reference");
    }
    if (clean->size() != noisy.size()) {
      throw std::invalid_argument("clean reference length differs from noisy input");
    }
  }
  torch::NoGradGuard no_grad;
  const int64_t n = static_cast<int64_t>(noisy.size());
  EncoderOutput enc =
      mode == EnhanceMode::kOracle
          ? model_->EncodeClean(stft_->Analyze(ToTensor(*clean).unsqueeze(0)))
          : model_->EncodeNoisy(stft_->Analyze(ToTensor(noisy).unsqueeze(0)));
  ComplexSpectrogram out =
      model_->DecodeClean(PosteriorMean(enc.posterior), enc.skips);
  return ToWaveform(stft_->Synthesize(out, n).squeeze(0), noisy.sample_rate);
}

Waveform Enhancer::Reconstruct(const Waveform& clean) {
  ValidateWaveform(clean);
  torch::NoGradGuard no_grad;
  EncoderOutput enc = model_->EncodeClean(stft_->Analyze(ToTensor(clean).unsqueeze(0)));
  ComplexSpectrogram out = model_->DecodeClean(PosteriorMean(enc.posterior), enc.skips);
  return ToWaveform(stft_->Synthesize(out, clean.size()).squeeze(0), clean.sample_rate);
}

double ReconstructionSiSnr(DccrnVae& model, const TrainingSet& data) {
  torch::NoGradGuard no_grad;
  const bool enc_training = model->cvae->encoder->is_training();
  const bool dec_training = model->cvae->decoder->is_training();
  model->cvae->eval();
  ConvStft stft(model->config().stft, at::kFloat);
  double total = 0;
  for (const auto& x : data.clean) {
    at::Tensor t = ToTensor(x).unsqueeze(0);
    EncoderOutput enc = model->EncodeClean(stft.Analyze(t));
    at::Tensor recon = stft.Synthesize(
        model->DecodeClean(PosteriorMean(enc.posterior), enc.skips), t.size(1));
    total += SiSnr(t.to(at::kDouble), recon.to(at::kDouble)).item<double>();
  }
  model->cvae->encoder->train(enc_training);
  model->cvae->decoder->train(dec_training);
  return total / static_cast<double>(data.size());
}

}  // namespace dvae
