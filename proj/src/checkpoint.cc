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

#include "dccrn_vae/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dvae {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'D', 'C', 'V', 'A', 'E', 'C', 'K', '1'};

std::string DtypeTag(at::ScalarType t) {
  switch (t) {
    case at::kFloat: return "f32";
    case at::kDouble: return "f64";
    case at::kLong: return "i64";
    case at::kByte: return "u8";
    default:
      throw std::invalid_argument(std::string("unsupported checkpoint dtype ") +
                                  c10::toString(t));
  }
}

at::ScalarType DtypeFromTag(const std::string& tag) {
  if (tag == "f32") return at::kFloat;
  if (tag == "f64") return at::kDouble;
  if (tag == "i64") return at::kLong;
  if (tag == "u8") return at::kByte;
  throw std::runtime_error("unknown checkpoint dtype tag: " + tag);
}

}  // namespace

const at::Tensor* ModelCheckpoint::Find(const std::string& name) const {
  for (const auto& [n, t] : arrays) {
    if (n == name) return &t;
  }
  return nullptr;
}

const at::Tensor& ModelCheckpoint::At(const std::string& name) const {
  const at::Tensor* t = Find(name);
  if (t == nullptr) throw ShapeMismatchError(name, "missing from checkpoint");
  return *t;
}

void SaveCheckpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  nlohmann::json index;
  index["stage"] = ckpt.stage;
  index["step"] = ckpt.step;
  index["config"] = ckpt.config;
  index["meta"] = ckpt.meta;
  index["arrays"] = nlohmann::json::array();
  std::vector<at::Tensor> blobs;
  uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.arrays) {
    at::Tensor c = t.detach().contiguous();
    const uint64_t nbytes = c.numel() * c.element_size();
    index["arrays"].push_back({{"name", name},
                               {"dtype", DtypeTag(c.scalar_type())},
                               {"shape", c.sizes().vec()},
                               {"offset", offset},
                               {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(c);
  }
  const std::string text = index.dump();
  // Write to a sibling file and rename so a crash never leaves a torn file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write(kMagic, sizeof(kMagic));
    const uint64_t len = text.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs) {
      os.write(static_cast<const char*>(b.data_ptr()),
               static_cast<std::streamsize>(b.numel() * b.element_size()));
    }
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move checkpoint into place: " + path);
  }
}

ModelCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  uint64_t len = 0;
  is.read(magic, sizeof(magic));
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("truncated checkpoint index: " + path);
  nlohmann::json index = nlohmann::json::parse(text);
  const std::streamoff base = is.tellg();

  ModelCheckpoint ckpt;
  ckpt.stage = index.at("stage").get<std::string>();
  ckpt.step = index.at("step").get<int64_t>();
  ckpt.config = index.at("config");
  ckpt.meta = index.value("meta", nlohmann::json::object());
  for (const auto& entry : index.at("arrays")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    at::Tensor t = at::empty(shape, DtypeFromTag(entry.at("dtype").get<std::string>()));
    const auto nbytes = entry.at("nbytes").get<uint64_t>();
    if (nbytes != static_cast<uint64_t>(t.numel() * t.element_size())) {
      throw std::runtime_error("checkpoint array '" + name + "' has inconsistent size");
    }
    is.seekg(base + static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
    is.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!is) throw std::runtime_error("truncated checkpoint data for '" + name + "'");
    ckpt.arrays.emplace_back(name, t);
  }
  return ckpt;
}

bool CheckpointsEqual(const ModelCheckpoint& a, const ModelCheckpoint& b) {
  if (a.stage != b.stage || a.step != b.step || a.config != b.config ||
      a.meta != b.meta || a.arrays.size() != b.arrays.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.arrays.size(); ++i) {
    const auto& [na, ta] = a.arrays[i];
    const auto& [nb, tb] = b.arrays[i];
    if (na != nb || ta.scalar_type() != tb.scalar_type() ||
        !ta.sizes().equals(tb.sizes())) {
      return false;
    }
    at::Tensor ca = ta.contiguous(), cb = tb.contiguous();
    if (std::memcmp(ca.data_ptr(), cb.data_ptr(), ca.numel() * ca.element_size()) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace dvae
