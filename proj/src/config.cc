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

#include "dccrn_vae/config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dvae {

namespace {

std::string Trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

int64_t ToInt(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int64_t out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

uint64_t ToUint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  uint64_t out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw std::invalid_argument("config key '" + key + "' expects a non-negative integer, got '" +
                                v + "'");
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

FlatConfig ParseFlatConfig(const std::string& text) {
  FlatConfig out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = Trim(line.substr(eq + 1));
  }
  return out;
}

FlatConfig ReadFlatConfig(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseFlatConfig(ss.str());
}

int64_t TrainConfig::StepsFor(int stage) const {
  int64_t s = stage == 1 ? stage1_steps : stage == 2 ? stage2_steps : stage3_steps;
  return s > 0 ? s : steps;
}

void TrainConfig::Validate() const {
  if (steps <= 0) throw std::invalid_argument("steps must be > 0");
  if (lr <= 0) throw std::invalid_argument("lr must be > 0");
  if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2 (batch normalization)");
  if (stage != "1" && stage != "2" && stage != "3" && stage != "all") {
    throw std::invalid_argument("stage must be 1, 2, 3 or all");
  }
  if (crop_seconds <= 0) throw std::invalid_argument("crop_seconds must be > 0");
  if (snr_min_db > snr_max_db) throw std::invalid_argument("snr_min must not exceed snr_max");
  if (kl_samples < 1) throw std::invalid_argument("kl_samples must be >= 1");
  if (grad_clip <= 0) throw std::invalid_argument("grad_clip must be > 0");
}

const std::vector<std::pair<std::string, std::string>>& TrainConfig::Schema() {
  static const std::vector<std::pair<std::string, std::string>> schema = {
      {"profile", "model/STFT profile: desk | paper"},
      {"stage", "stage to train: 1 | 2 | 3 | all"},
      {"steps", "optimizer steps per stage"},
      {"stage1.steps", "override steps for stage 1"},
      {"stage2.steps", "override steps for stage 2"},
      {"stage3.steps", "override steps for stage 3"},
      {"batch_size", "utterance crops per step (>= 2)"},
      {"lr", "Adam learning rate"},
      {"alpha", "weight of the noise KL term in the latent loss"},
      {"seed", "seed for initialization, data order and sampling"},
      {"data.manifest", "path to manifest.jsonl"},
      {"ckpt.dir", "checkpoint directory"},
      {"log.csv", "loss log path (default <ckpt.dir>/loss.csv)"},
      {"crop_seconds", "training crop length in seconds"},
      {"checkpoint_every", "save a checkpoint every N steps"},
      {"snr_min", "lowest training mixture SNR in dB"},
      {"snr_max", "highest training mixture SNR in dB"},
      {"grad_clip", "global gradient-norm clip per optimizer"},
      {"kl_samples", "Monte Carlo draws per KL estimate"},
  };
  return schema;
}

TrainConfig TrainConfig::FromFlat(const FlatConfig& flat) {
  return FromFlat(flat, TrainConfig());
}

TrainConfig TrainConfig::FromFlat(const FlatConfig& flat, TrainConfig c) {
  for (const auto& [key, v] : flat) {
    if (key == "profile") c.profile = ParseProfile(v);
    else if (key == "stage") c.stage = v;
    else if (key == "steps") c.steps = ToInt(key, v);
    else if (key == "stage1.steps") c.stage1_steps = ToInt(key, v);
    else if (key == "stage2.steps") c.stage2_steps = ToInt(key, v);
    else if (key == "stage3.steps") c.stage3_steps = ToInt(key, v);
    else if (key == "batch_size") c.batch_size = ToInt(key, v);
    else if (key == "lr") c.lr = ToDouble(key, v);
    else if (key == "alpha") c.alpha = ToDouble(key, v);
    else if (key == "seed") c.seed = ToUint(key, v);
    else if (key == "data.manifest") c.manifest = v;
    else if (key == "ckpt.dir") c.ckpt_dir = v;
    else if (key == "log.csv") c.log_csv = v;
    else if (key == "crop_seconds") c.crop_seconds = ToDouble(key, v);
    else if (key == "checkpoint_every") c.checkpoint_every = ToInt(key, v);
    else if (key == "snr_min") c.snr_min_db = ToDouble(key, v);
    else if (key == "snr_max") c.snr_max_db = ToDouble(key, v);
    else if (key == "grad_clip") c.grad_clip = ToDouble(key, v);
    else if (key == "kl_samples") c.kl_samples = static_cast<int>(ToInt(key, v));
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  c.Validate();
  return c;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"profile", ProfileName(profile)},
          {"stage", stage},
          {"steps", steps},
          {"stage1.steps", stage1_steps},
          {"stage2.steps", stage2_steps},
          {"stage3.steps", stage3_steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"alpha", alpha},
          {"seed", seed},
          {"data.manifest", manifest},
          {"ckpt.dir", ckpt_dir},
          {"log.csv", log_csv},
          {"crop_seconds", crop_seconds},
          {"checkpoint_every", checkpoint_every},
          {"snr_min", snr_min_db},
          {"snr_max", snr_max_db},
          {"grad_clip", grad_clip},
          {"kl_samples", kl_samples}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  FlatConfig flat;
  for (const auto& [key, v] : j.items()) {
    flat[key] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return FromFlat(flat);
}

nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return {{"profile", ProfileName(c.profile)},
          {"fft_size", c.stft.fft_size},
          {"frame_len", c.stft.frame_len},
          {"hop", c.stft.hop},
          {"channels", c.channels},
          {"kernel", c.kernel},
          {"stride", c.stride},
          {"lstm_units", c.lstm_units},
          {"latent_dim", c.latent_dim}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig c = ModelConfig::ForProfile(ParseProfile(j.at("profile").get<std::string>()));
  c.stft.fft_size = j.at("fft_size").get<int>();
  c.stft.frame_len = j.at("frame_len").get<int>();
  c.stft.hop = j.at("hop").get<int>();
  c.channels = j.at("channels").get<std::vector<int64_t>>();
  c.kernel = j.at("kernel").get<std::array<int64_t, 2>>();
  c.stride = j.at("stride").get<std::array<int64_t, 2>>();
  c.lstm_units = j.at("lstm_units").get<int64_t>();
  c.latent_dim = j.at("latent_dim").get<int64_t>();
  c.Validate();
  return c;
}

}  // namespace dvae
