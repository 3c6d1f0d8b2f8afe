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

#ifndef DCCRN_VAE_TRAINING_H_
#define DCCRN_VAE_TRAINING_H_

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dccrn_vae/checkpoint.h"
#include "dccrn_vae/config.h"
#include "dccrn_vae/data.h"
#include "dccrn_vae/losses.h"
#include "dccrn_vae/models.h"

namespace dvae {

// Source pairs used for on-the-fly mixing.
struct TrainingSet {
  std::vector<std::string> ids;
  std::vector<Waveform> clean;
  std::vector<Waveform> noise;

  std::size_t size() const { return clean.size(); }
};

// Loads the records of one split ("all" for every record). Clean and noise
// of a record are trimmed to a common length.
TrainingSet LoadTrainingSet(const MixManifest& manifest,
                            const std::string& split = "train");

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingCheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Groups updated by each stage; everything else is frozen.
std::vector<std::string> TrainableGroups(int stage);

// Owns the model, the per-group optimizers and all random state. One
// instance drives one stage at a time.
class Trainer {
 public:
  Trainer(const TrainConfig& config, TrainingSet data);

  const TrainConfig& config() const { return config_; }
  const ModelConfig& model_config() const { return model_config_; }
  DccrnVae& model() { return model_; }
  const TrainingSet& data() const { return data_; }

  // Freezes the groups not trained in `stage` and creates fresh optimizers
  // for the rest. Resets the step counter.
  void BeginStage(int stage);
  int stage() const { return stage_; }
  int64_t step() const { return step_; }

  // One update of the current stage. Stage 3 performs one discriminator
  // and one generator update. Throws NonFiniteLossError (after writing
  // <ckpt_dir>/nonfinite_dump.ckpt) on a NaN or Inf loss.
  std::map<std::string, LossBreakdown> Step();

  int64_t generator_updates() const { return generator_updates_; }
  int64_t discriminator_updates() const { return discriminator_updates_; }

  // Full state: model arrays, optimizer moments and random state.
  ModelCheckpoint Snapshot() const;
  // Resumes from a Snapshot taken by a compatible trainer.
  void Restore(const ModelCheckpoint& ckpt);
  // Copies only parameters and buffers; ShapeMismatchError names the
  // first offending array.
  void LoadWeights(const ModelCheckpoint& ckpt);

  // Sum of squared gradient entries over a group (0 when no gradient).
  double GroupGradNormSq(const std::string& group);

 private:
  struct Batch {
    at::Tensor clean;  // (B, N), x after any joint rescale
    at::Tensor noise;  // (B, N), g d
    at::Tensor noisy;  // (B, N), y
  };
  Batch DrawBatch();
  std::map<std::string, LossBreakdown> StepStage1();
  std::map<std::string, LossBreakdown> StepStage2();
  std::map<std::string, LossBreakdown> StepStage3();
  void ApplyUpdate(const std::string& group, const at::Tensor& loss);
  void CheckFinite(const LossBreakdown& loss, const std::string& what);
  [[noreturn]] void FailNonFinite(const std::string& what, const std::string& detail);
  void SetModes();

  TrainConfig config_;
  ModelConfig model_config_;
  TrainingSet data_;
  DccrnVae model_{nullptr};
  std::unique_ptr<ConvStft> stft_;
  at::Generator gen_;
  std::mt19937_64 data_rng_;
  int stage_ = 0;
  int64_t step_ = 0;
  int64_t generator_updates_ = 0;
  int64_t discriminator_updates_ = 0;
  std::map<std::string, std::unique_ptr<torch::optim::Adam>> optimizers_;
};

struct StageReport {
  int stage = 0;
  int64_t steps = 0;
  // Per-step loss components ("<role>.<component>", plus "<role>.total").
  std::map<std::string, std::vector<double>> curves;
  std::string checkpoint_path;
};

// Called after every step; returning false stops the stage early.
using StepCallback =
    std::function<bool(const Trainer&, const std::map<std::string, LossBreakdown>&)>;

// Runs `steps` updates of `stage`, logging to the CSV given in the config
// and saving <ckpt_dir>/stage<N>_latest.ckpt every checkpoint_every steps
// and <ckpt_dir>/stage<N>.ckpt at the end.
StageReport RunStage(Trainer& trainer, int stage, int64_t steps,
                     const StepCallback& callback = nullptr);

// Stage entry points. Stages 2 and 3 load the previous stage's checkpoint
// from ckpt_dir and throw MissingCheckpointError if it is absent.
StageReport RunStage1(Trainer& trainer, const StepCallback& callback = nullptr);
StageReport RunStage2(Trainer& trainer, const StepCallback& callback = nullptr);
StageReport RunStage3(Trainer& trainer, const StepCallback& callback = nullptr);

std::string StageCheckpointPath(const std::string& ckpt_dir, int stage);

enum class EnhanceMode { kNoisy, kOracle };

// Inference model restored from a stage-2 or stage-3 checkpoint, always in
// eval mode.
class Enhancer {
 public:
  explicit Enhancer(const ModelCheckpoint& ckpt);
  static Enhancer FromFile(const std::string& path);

  // Noisy mode decodes the NS-VAE posterior mean with its skips; oracle
  // mode uses the clean encoder on `clean` instead. Output length equals
  // input length.
  Waveform Enhance(const Waveform& noisy, EnhanceMode mode = EnhanceMode::kNoisy,
                   const Waveform* clean = nullptr);
  // Clean-VAE reconstruction through the posterior mean.
  Waveform Reconstruct(const Waveform& clean);

  const ModelConfig& model_config() const { return model_config_; }

 private:
  ModelConfig model_config_;
  DccrnVae model_{nullptr};
  std::unique_ptr<ConvStft> stft_;
};

// Mean clean-VAE reconstruction SI-SNR over a training set, eval mode,
// posterior mean.
double ReconstructionSiSnr(DccrnVae& model, const TrainingSet& data);

}  // namespace dvae

#endif  // DCCRN_VAE_TRAINING_H_
