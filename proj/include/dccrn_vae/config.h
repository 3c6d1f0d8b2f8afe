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

#ifndef DCCRN_VAE_CONFIG_H_
#define DCCRN_VAE_CONFIG_H_

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dccrn_vae/models.h"

namespace dvae {

// Flat "key = value" text; '#' starts a comment.
using FlatConfig = std::map<std::string, std::string>;

FlatConfig ParseFlatConfig(const std::string& text);
FlatConfig ReadFlatConfig(const std::string& path);

struct TrainConfig {
  Profile profile = Profile::kDesk;
  std::string stage = "all";  // 1 | 2 | 3 | all
  int64_t steps = 1000;       // per stage unless overridden below
  int64_t stage1_steps = -1;
  int64_t stage2_steps = -1;
  int64_t stage3_steps = -1;
  int64_t batch_size = 8;
  double lr = 1e-3;
  double alpha = 0.25;
  uint64_t seed = 1234;
  std::string manifest;
  std::string ckpt_dir = "checkpoints";
  std::string log_csv;  // empty: <ckpt_dir>/loss.csv
  double crop_seconds = 0.5;
  int64_t checkpoint_every = 500;
  double snr_min_db = -10.0;
  double snr_max_db = 15.0;
  double grad_clip = 5.0;
  int kl_samples = 1;

  int64_t StepsFor(int stage) const;
  void Validate() const;

  // Keys accepted by FromFlat, with one-line descriptions.
  static const std::vector<std::pair<std::string, std::string>>& Schema();
  // Unknown keys and malformed values throw std::invalid_argument.
  static TrainConfig FromFlat(const FlatConfig& flat);
  static TrainConfig FromFlat(const FlatConfig& flat, TrainConfig base);
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

nlohmann::json ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

}  // namespace dvae

#endif  // DCCRN_VAE_CONFIG_H_
