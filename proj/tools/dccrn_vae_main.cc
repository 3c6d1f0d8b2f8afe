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

// Command-line front end. Every subcommand forwards to the library.

#include <ATen/Parallel.h>
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dccrn_vae/config.h"
#include "dccrn_vae/data.h"
#include "dccrn_vae/evaluation.h"
#include "dccrn_vae/training.h"
#include "dccrn_vae/verification.h"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;
constexpr const char* kCkptEnv = "DCCRN_VAE_CKPT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string SchemaText() {
  std::string out = "config keys (key = value):\n";
  for (const auto& [key, desc] : dvae::TrainConfig::Schema()) {
    out += "  " + key + std::string(key.size() < 18 ? 18 - key.size() : 1, ' ') + desc + "\n";
  }
  return out;
}

struct TrainArgs {
  std::string stage = "all";
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> profile, manifest, ckpt_dir, log_csv;
  std::optional<int64_t> steps, batch_size;
  std::optional<double> lr, alpha;
  std::optional<uint64_t> seed;
  int threads = 1;
};

dvae::TrainConfig ResolveTrainConfig(const TrainArgs& a) {
  dvae::FlatConfig flat;
  if (const char* env = std::getenv(kCkptEnv)) flat["ckpt.dir"] = env;
  if (!a.config_path.empty()) {
    for (const auto& [k, v] : dvae::ReadFlatConfig(a.config_path)) flat[k] = v;
  }
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    flat[s.substr(0, eq)] = s.substr(eq + 1);
  }
  auto put = [&](const char* key, const auto& opt) {
    if (opt) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, std::string>) {
        flat[key] = *opt;
      } else {
        flat[key] = std::to_string(*opt);
      }
    }
  };
  put("profile", a.profile);
  put("data.manifest", a.manifest);
  put("ckpt.dir", a.ckpt_dir);
  put("log.csv", a.log_csv);
  put("steps", a.steps);
  put("batch_size", a.batch_size);
  put("lr", a.lr);
  put("alpha", a.alpha);
  put("seed", a.seed);
  flat["stage"] = a.stage;
  try {
    return dvae::TrainConfig::FromFlat(flat);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void PrintReport(const dvae::StageReport& r) {
  std::cout << "stage " << r.stage << " finished after " << r.steps << " steps";
  for (const auto& [name, curve] : r.curves) {
    if (name.ends_with(".total") && !curve.empty()) {
      std::cout << "  " << name << "=" << curve.back();
    }
  }
  std::cout << "\n  checkpoint: " << r.checkpoint_path << "\n";
}

int RunTrain(const TrainArgs& args) {
  at::set_num_threads(args.threads);
  const dvae::TrainConfig cfg = ResolveTrainConfig(args);
  if (cfg.manifest.empty()) throw UsageError("data.manifest is required (--manifest)");
  dvae::Trainer trainer(cfg, dvae::LoadTrainingSet(dvae::ReadManifest(cfg.manifest), "train"));
  auto log_progress = [](const dvae::Trainer& t,
                         const std::map<std::string, dvae::LossBreakdown>& losses) {
    if (t.step() % 50 == 0) {
      std::cout << "stage " << t.stage() << " step " << t.step();
      for (const auto& [role, l] : losses) std::cout << "  " << role << ".total=" << l.total_value();
      std::cout << std::endl;
    }
    return true;
  };
  std::vector<int> stages;
  if (cfg.stage == "all") {
    stages = {1, 2, 3};
  } else {
    stages = {std::stoi(cfg.stage)};
  }
  for (int stage : stages) {
    switch (stage) {
      case 1: PrintReport(dvae::RunStage1(trainer, log_progress)); break;
      case 2: PrintReport(dvae::RunStage2(trainer, log_progress)); break;
      default: PrintReport(dvae::RunStage3(trainer, log_progress)); break;
    }
  }
  return 0;
}

int PrintSuite(const dvae::SuiteReport& report) {
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.family << ": " << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
  }
  for (const auto& [family, counts] : report.Counts()) {
    std::cout << family << ": " << counts.first << "/" << counts.second << " passed\n";
  }
  return report.AllPassed() ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCCRN-VAE speech enhancement: data synthesis, staged training, "
               "enhancement, evaluation and verification.\n"
               "Training settings come from --config, then --set key=value, then "
               "dedicated flags; later sources win. " + std::string(kCkptEnv) +
               " sets the default checkpoint directory."};
  app.require_subcommand(1);
  app.footer(SchemaText());

  dvae::DatasetConfig data_cfg;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic corpus and manifest");
  synth->add_option("--out", data_cfg.out_dir, "Output directory")->required();
  synth->add_option("--num", data_cfg.num_utterances, "Number of utterances")
      ->check(CLI::PositiveNumber);
  synth->add_option("--duration", data_cfg.duration_s, "Seconds per utterance");
  synth->add_option("--seed", data_cfg.seed, "Random seed");
  synth->add_option("--train-fraction", data_cfg.train_fraction, "Fraction of sources for training");
  synth->add_option("--valid-fraction", data_cfg.valid_fraction, "Fraction of sources for validation");

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Run training stage 1, 2, 3 or all");
  train->add_option("--stage", targs.stage, "Stage to run")
      ->check(CLI::IsMember({"1", "2", "3", "all"}))
      ->required();
  train->add_option("--config", targs.config_path, "Flat key = value config file")
      ->check(CLI::ExistingFile);
  train->add_option("--set", targs.sets, "Override a config key (key=value)");
  train->add_option("--profile", targs.profile, "desk or paper");
  train->add_option("--manifest", targs.manifest, "Dataset manifest (data.manifest)");
  train->add_option("--ckpt-dir", targs.ckpt_dir, "Checkpoint directory (ckpt.dir)");
  train->add_option("--log-csv", targs.log_csv, "Loss log path (log.csv)");
  train->add_option("--steps", targs.steps, "Steps per stage");
  train->add_option("--batch-size", targs.batch_size, "Batch size");
  train->add_option("--lr", targs.lr, "Learning rate");
  train->add_option("--alpha", targs.alpha, "Weight of the noise KL term");
  train->add_option("--seed", targs.seed, "Random seed");
  train->add_option("--threads", targs.threads, "Intra-op threads (1 = deterministic)")
      ->check(CLI::PositiveNumber);

  std::string in_path, out_path, ckpt_path, clean_path;
  bool oracle = false;
  auto* enhance = app.add_subcommand("enhance", "Enhance one noisy WAV file");
  enhance->add_option("--in", in_path, "Noisy input WAV")->required()->check(CLI::ExistingFile);
  enhance->add_option("--out", out_path, "Enhanced output WAV")->required();
  enhance->add_option("--ckpt", ckpt_path, "Stage-2 or stage-3 checkpoint")->required();
  auto* clean_opt = enhance->add_option("--clean", clean_path, "Clean reference (oracle mode)")
                        ->check(CLI::ExistingFile);
  enhance->add_flag("--oracle", oracle, "Use the clean encoder on --clean")->needs(clean_opt);

  std::string manifest_path, split = "test", csv_path, json_path;
  bool eval_oracle = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a manifest split");
  evaluate->add_option("--manifest", manifest_path, "Dataset manifest")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--ckpt", ckpt_path, "Stage-2 or stage-3 checkpoint")->required();
  evaluate->add_option("--split", split, "train, valid, test or all");
  evaluate->add_flag("--oracle", eval_oracle, "Oracle mode (clean encoder)");
  evaluate->add_option("--csv", csv_path, "Per-utterance report");
  evaluate->add_option("--json", json_path, "Aggregate report");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  auto* selftest = app.add_subcommand("selftest", "Invariant self-test suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << SchemaText();
    return kUsageError;
  }

  try {
    if (*synth) {
      const dvae::MixManifest m = dvae::BuildDataset(data_cfg);
      std::cout << "wrote " << m.records.size() << " records to "
                << (std::filesystem::path(data_cfg.out_dir) / "manifest.jsonl").string() << "\n";
      return 0;
    }
    if (*train) return RunTrain(targs);
    if (*enhance) {
      at::set_num_threads(1);
      dvae::Enhancer enhancer = dvae::Enhancer::FromFile(ckpt_path);
      const dvae::Waveform noisy = dvae::LoadWav(in_path);
      std::optional<dvae::Waveform> clean;
      if (oracle) clean = dvae::LoadWav(clean_path);
      const dvae::Waveform out = enhancer.Enhance(
          noisy, oracle ? dvae::EnhanceMode::kOracle : dvae::EnhanceMode::kNoisy,
          clean ? &*clean : nullptr);
      dvae::SaveWav(out, out_path);
      return 0;
    }
    if (*evaluate) {
      at::set_num_threads(1);
      const dvae::EvalReport report = dvae::EvaluateCorpus(
          dvae::ReadManifest(manifest_path), ckpt_path,
          eval_oracle ? dvae::EnhanceMode::kOracle : dvae::EnhanceMode::kNoisy, split);
      if (!csv_path.empty()) report.WriteCsv(csv_path);
      if (!json_path.empty()) report.WriteJson(json_path);
      std::cout << report.AggregateJson().dump(2) << "\n";
      return 0;
    }
    if (*gradcheck) return PrintSuite(dvae::RunGradCheckSuite());
    if (*selftest) return PrintSuite(dvae::RunSelfTest());
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << SchemaText();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
