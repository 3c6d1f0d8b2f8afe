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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dccrn_vae/training.h"
#include "test_util.h"

namespace fs = std::filesystem;

namespace {

dvae::TrainingSet TinySet() {
  dvae::TrainingSet set;
  for (int i = 0; i < 3; ++i) {
    set.ids.push_back("u" + std::to_string(i));
    set.clean.push_back(dvae::GenSyntheticSpeech(100 + i, 0.5));
    set.noise.push_back(dvae::GenSyntheticNoise(static_cast<dvae::NoiseKind>(i), 200 + i, 0.5));
  }
  return set;
}

dvae::TrainConfig TinyConfig(const std::string& dir) {
  dvae::TrainConfig c;
  c.batch_size = 2;
  c.crop_seconds = 0.1;
  c.steps = 2;
  c.seed = 5;
  c.ckpt_dir = dir;
  c.checkpoint_every = 0;
  return c;
}

std::map<std::string, at::Tensor> Copy(dvae::DccrnVae& m, const std::string& group) {
  std::map<std::string, at::Tensor> out;
  for (const auto& [name, t] : m->GroupTensors(group)) out[name] = t.detach().clone();
  return out;
}

bool Same(dvae::DccrnVae& m, const std::string& group, const std::map<std::string, at::Tensor>& before) {
  for (const auto& [name, t] : m->GroupTensors(group)) {
    if (!at::equal(t, before.at(name))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stage groups") {
  CHECK(dvae::TrainableGroups(1) ==
        std::vector<std::string>{dvae::kCleanEncoder, dvae::kCleanDecoder, dvae::kNoiseEncoder, dvae::kNoiseDecoder});
  CHECK(dvae::TrainableGroups(2) == std::vector<std::string>{dvae::kNoisyEncoder});
  CHECK(dvae::TrainableGroups(3) == std::vector<std::string>{dvae::kDiscriminator, dvae::kCleanDecoder});
  CHECK_THROWS_AS(dvae::TrainableGroups(4), std::invalid_argument);
}

TEST_CASE("trainer construction errors") {
  const auto dir = dvae::testing::ScratchDir("train_errors");
  CHECK_THROWS_WITH(dvae::Trainer(TinyConfig(dir), {}), doctest::Contains("empty training corpus"));
  auto set = TinySet();
  set.clean[1].sample_rate = 8000;
  CHECK_THROWS_WITH(dvae::Trainer(TinyConfig(dir), set), doctest::Contains("16 kHz"));
  dvae::Trainer t(TinyConfig(dir), TinySet());
  CHECK_THROWS_AS(t.Step(), std::logic_error);
}

TEST_CASE("stage 1 is deterministic under a seed") {
  const auto dir = dvae::testing::ScratchDir("train_det");
  dvae::Trainer a(TinyConfig(dir), TinySet()), b(TinyConfig(dir), TinySet());
  CHECK(dvae::CheckpointsEqual(a.Snapshot(), b.Snapshot()));
  a.BeginStage(1);
  b.BeginStage(1);
  for (int i = 0; i < 2; ++i) {
    auto la = a.Step(), lb = b.Step();
    CHECK(la.at("cvae").total_value() == lb.at("cvae").total_value());
    CHECK(la.count("nvae") == 1);
  }
  CHECK(dvae::CheckpointsEqual(a.Snapshot(), b.Snapshot()));
  auto c = TinyConfig(dir);
  c.seed = 6;
  dvae::Trainer other(c, TinySet());
  other.BeginStage(1);
  other.Step();
  other.Step();
  CHECK(!dvae::CheckpointsEqual(a.Snapshot(), other.Snapshot()));
}

TEST_CASE("frozen groups stay bit-identical and get no gradient") {
  const auto dir = dvae::testing::ScratchDir("train_freeze");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  t.BeginStage(1);
  t.Step();
  for (const auto& g : {dvae::kNoisyEncoder, dvae::kDiscriminator}) CHECK(t.GroupGradNormSq(g) == 0.0);

  t.BeginStage(2);
  std::map<std::string, std::map<std::string, at::Tensor>> before;
  for (const auto& g : dvae::ParameterGroups()) before[g] = Copy(t.model(), g);
  t.Step();
  t.Step();
  for (const auto& g : {dvae::kCleanEncoder, dvae::kCleanDecoder, dvae::kNoiseEncoder, dvae::kNoiseDecoder,
                        dvae::kDiscriminator}) {
    INFO(g);
    CHECK(Same(t.model(), g, before[g]));
    CHECK(t.GroupGradNormSq(g) == 0.0);
  }
  CHECK(!Same(t.model(), dvae::kNoisyEncoder, before[dvae::kNoisyEncoder]));
  CHECK(t.GroupGradNormSq(dvae::kNoisyEncoder) > 0.0);

  t.BeginStage(3);
  for (const auto& g : dvae::ParameterGroups()) before[g] = Copy(t.model(), g);
  auto losses = t.Step();
  CHECK(losses.count("disc") == 1);
  CHECK(losses.count("generator") == 1);
  CHECK(t.generator_updates() == 1);
  CHECK(t.discriminator_updates() == 1);
  for (const auto& g : {dvae::kCleanEncoder, dvae::kNoiseEncoder, dvae::kNoiseDecoder, dvae::kNoisyEncoder}) {
    INFO(g);
    CHECK(Same(t.model(), g, before[g]));
    CHECK(t.GroupGradNormSq(g) == 0.0);
  }
  CHECK(!Same(t.model(), dvae::kCleanDecoder, before[dvae::kCleanDecoder]));
  CHECK(!Same(t.model(), dvae::kDiscriminator, before[dvae::kDiscriminator]));
}

TEST_CASE("restoring a snapshot resumes bit-exactly") {
  const auto dir = dvae::testing::ScratchDir("train_resume");
  dvae::Trainer a(TinyConfig(dir), TinySet());
  a.BeginStage(1);
  a.Step();
  a.Step();
  auto mid = a.Snapshot();
  dvae::SaveCheckpoint(mid, dir + "/mid.ckpt");
  a.Step();
  a.Step();

  auto cfg = TinyConfig(dir);
  cfg.seed = 77;  // overwritten by the restored state
  dvae::Trainer b(cfg, TinySet());
  b.Restore(dvae::LoadCheckpoint(dir + "/mid.ckpt"));
  CHECK(b.stage() == 1);
  CHECK(b.step() == 2);
  b.Step();
  b.Step();
  auto sa = a.Snapshot(), sb = b.Snapshot();
  sb.config = sa.config;
  CHECK(dvae::CheckpointsEqual(sa, sb));
}

TEST_CASE("weight loading names the offending array") {
  const auto dir = dvae::testing::ScratchDir("train_mismatch");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  auto ckpt = t.Snapshot();
  for (auto& [name, arr] : ckpt.arrays) {
    if (name == "model.nsvae.lstm.real_w_ih") arr = at::zeros({3, 3});
  }
  try {
    t.LoadWeights(ckpt);
    FAIL("expected a shape mismatch");
  } catch (const dvae::ShapeMismatchError& e) {
    CHECK(e.array() == "model.nsvae.lstm.real_w_ih");
    CHECK(std::string(e.what()).find("expected shape") != std::string::npos);
  }
  auto partial = t.Snapshot();
  partial.arrays.erase(partial.arrays.begin());
  CHECK_THROWS_AS(t.LoadWeights(partial), dvae::ShapeMismatchError);
}

TEST_CASE("later stages need the previous checkpoint") {
  const auto dir = dvae::testing::ScratchDir("train_missing");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  CHECK_THROWS_WITH_AS(dvae::RunStage2(t), doctest::Contains("missing stage-1 checkpoint"),
                       dvae::MissingCheckpointError);
  CHECK_THROWS_AS(dvae::RunStage3(t), dvae::MissingCheckpointError);
}

TEST_CASE("non-finite losses abort with a state dump") {
  const auto dir = dvae::testing::ScratchDir("train_nan");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  t.BeginStage(1);
  {
    torch::NoGradGuard ng;
    t.model()->cvae->encoder->mu_head->bias_re.fill_(NAN);
  }
  CHECK_THROWS_WITH_AS(t.Step(), doctest::Contains("non-finite loss in stage 1 step 0 (cvae)"),
                       dvae::NonFiniteLossError);
  CHECK(fs::exists(dir + "/nonfinite_dump.ckpt"));
  auto dump = dvae::LoadCheckpoint(dir + "/nonfinite_dump.ckpt");
  CHECK(std::isnan(dump.At("model.cvae.encoder.mu_head.bias_re")[0].item<float>()));
}

TEST_CASE("stage runner logs, checkpoints and honours the callback") {
  const auto dir = dvae::testing::ScratchDir("train_run");
  auto cfg = TinyConfig(dir);
  cfg.checkpoint_every = 1;
  cfg.stage2_steps = 3;
  dvae::Trainer t(cfg, TinySet());
  auto r1 = dvae::RunStage1(t);
  CHECK(r1.steps == 2);
  CHECK(r1.curves.at("cvae.si_snr").size() == 2);
  CHECK(r1.curves.at("nvae.kl").size() == 2);
  CHECK(fs::exists(dir + "/stage1.ckpt"));
  CHECK(fs::exists(dir + "/stage1_latest.ckpt"));
  CHECK(dvae::LoadCheckpoint(dir + "/stage1.ckpt").meta["active_stage"] == 1);

  int calls = 0;
  auto r2 = dvae::RunStage2(t, [&](const dvae::Trainer& tr, const auto& losses) {
    ++calls;
    CHECK(losses.count("nsvae") == 1);
    return tr.step() < 2;
  });
  CHECK(calls == 2);
  CHECK(r2.steps == 2);
  CHECK(r2.curves.at("nsvae.residual").size() == 2);

  std::ifstream is(dir + "/loss.csv");
  std::string header, line;
  std::getline(is, header);
  CHECK(header == "step,stage,component,value");
  std::set<std::string> stages;
  while (std::getline(is, line)) stages.insert(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
  CHECK(stages == std::set<std::string>{"stage1.cvae", "stage1.nvae", "stage2.nsvae"});
}

TEST_CASE("enhancer contract") {
  const auto dir = dvae::testing::ScratchDir("train_enhance");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  t.BeginStage(1);
  t.Step();
  CHECK_THROWS_WITH(dvae::Enhancer(t.Snapshot()), doctest::Contains("stage-2 or stage-3"));
  t.BeginStage(2);
  t.Step();
  dvae::Enhancer enh(t.Snapshot());
  auto x = dvae::GenSyntheticSpeech(9, 0.5);
  x.samples.resize(5001);
  auto d = dvae::GenSyntheticNoise(dvae::NoiseKind::kWhite, 9, 0.5);
  d.samples.resize(5001);
  auto mix = dvae::MixAtSnr(x, d, 0.0);
  auto a = enh.Enhance(mix.noisy), b = enh.Enhance(mix.noisy);
  CHECK(a.size() == 5001);
  CHECK(a.samples == b.samples);
  CHECK_THROWS_WITH(enh.Enhance(mix.noisy, dvae::EnhanceMode::kOracle), doctest::Contains("requires a clean reference"));
  auto oracle = enh.Enhance(mix.noisy, dvae::EnhanceMode::kOracle, &mix.clean);
  CHECK(oracle.size() == 5001);
  CHECK(oracle.samples != a.samples);
  dvae::Waveform shorter = mix.clean;
  shorter.samples.pop_back();
  CHECK_THROWS_AS(enh.Enhance(mix.noisy, dvae::EnhanceMode::kOracle, &shorter), std::invalid_argument);
  dvae::Waveform slow = mix.noisy;
  slow.sample_rate = 8000;
  CHECK_THROWS_AS(enh.Enhance(slow), std::invalid_argument);
  CHECK(enh.Reconstruct(mix.clean).size() == 5001);
}

TEST_CASE("reconstruction metric restores module modes") {
  const auto dir = dvae::testing::ScratchDir("train_recon");
  dvae::Trainer t(TinyConfig(dir), TinySet());
  t.BeginStage(1);
  t.Step();
  CHECK(t.model()->cvae->encoder->is_training());
  const double a = dvae::ReconstructionSiSnr(t.model(), t.data());
  const double b = dvae::ReconstructionSiSnr(t.model(), t.data());
  CHECK(std::isfinite(a));
  CHECK(a == b);
  CHECK(t.model()->cvae->encoder->is_training());
  CHECK(t.model()->cvae->decoder->is_training());
}

TEST_CASE("training sets load from a manifest") {
  const auto dir = dvae::testing::ScratchDir("train_load");
  dvae::DatasetConfig dc;
  dc.out_dir = dir;
  dc.num_utterances = 10;
  dc.duration_s = 0.5;
  auto m = dvae::BuildDataset(dc);
  auto train = dvae::LoadTrainingSet(dvae::ReadManifest(dir + "/manifest.jsonl"));
  CHECK(train.size() == 7);
  CHECK(dvae::LoadTrainingSet(m, "all").size() == 10);
  CHECK(train.clean[0].size() == train.noise[0].size());
  CHECK(dvae::LoadTrainingSet(m, "nope").size() == 0);
}
