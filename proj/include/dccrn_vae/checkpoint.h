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

#ifndef DCCRN_VAE_CHECKPOINT_H_
#define DCCRN_VAE_CHECKPOINT_H_

#include <ATen/ATen.h>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dvae {

// Named arrays plus metadata. On disk: the 8-byte magic "DCVAECK1", a
// little-endian uint64 index length, a JSON index
//   {"stage", "step", "config", "meta",
//    "arrays": [{"name", "dtype", "shape", "offset", "nbytes"}]}
// and then the raw little-endian array bytes (offsets are relative to the
// first byte after the index).
struct ModelCheckpoint {
  std::vector<std::pair<std::string, at::Tensor>> arrays;
  std::string stage;
  int64_t step = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json meta = nlohmann::json::object();

  const at::Tensor* Find(const std::string& name) const;
  const at::Tensor& At(const std::string& name) const;
};

void SaveCheckpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint LoadCheckpoint(const std::string& path);

// Bitwise equality of every array and of the metadata.
bool CheckpointsEqual(const ModelCheckpoint& a, const ModelCheckpoint& b);

// Thrown when a stored array does not match the live model.
class ShapeMismatchError : public std::runtime_error {
 public:
  ShapeMismatchError(const std::string& array, const std::string& detail)
      : std::runtime_error("checkpoint array '" + array + "': " + detail),
        array_(array) {}
  const std::string& array() const { return array_; }

 private:
  std::string array_;
};

}  // namespace dvae

#endif  // DCCRN_VAE_CHECKPOINT_H_
