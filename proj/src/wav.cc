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

#include "dccrn_vae/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dvae {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void WriteLe(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

void ValidateWaveform(const Waveform& wave) {
  if (wave.sample_rate <= 0) {
    throw std::invalid_argument("waveform sample rate must be positive");
  }
  for (float s : wave.samples) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("waveform contains non-finite samples");
    }
  }
}

Waveform LoadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    uint32_t size = ReadLe<uint32_t>(id + 4);
    const char* body = id + 8;
    std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw std::runtime_error("truncated fmt chunk");
      format = ReadLe<uint16_t>(body);
      channels = ReadLe<uint16_t>(body + 2);
      rate = ReadLe<uint32_t>(body + 4);
      bits = ReadLe<uint16_t>(body + 14);
      if (format == kFormatExtensible && size >= 26 && avail >= 26) {
        format = ReadLe<uint16_t>(body + 24);
      }
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_size = std::min<std::size_t>(size, avail);
    }
    pos += 8 + size + (size & 1u);
  }
  if (format == 0) throw std::runtime_error("missing fmt chunk: " + path);
  if (data == nullptr) throw std::runtime_error("missing data chunk: " + path);
  if (channels != 1) {
    throw std::runtime_error("unsupported channel count " +
                             std::to_string(channels) + " in " + path);
  }

  Waveform wave;
  wave.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    std::size_t n = data_size / 2;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      wave.samples[i] = ReadLe<int16_t>(data + 2 * i) / 32768.0f;
    }
  } else if (format == kFormatFloat && bits == 32) {
    std::size_t n = data_size / 4;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      wave.samples[i] = ReadLe<float>(data + 4 * i);
    }
  } else {
    throw std::runtime_error("unsupported sample format (format " +
                             std::to_string(format) + ", " +
                             std::to_string(bits) + " bits) in " + path);
  }
  ValidateWaveform(wave);
  return wave;
}

void SaveWav(const Waveform& wave, const std::string& path) {
  ValidateWaveform(wave);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write wav file: " + path);
  const uint32_t n = static_cast<uint32_t>(wave.samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  WriteLe<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteLe<uint32_t>(os, 16);
  WriteLe<uint16_t>(os, kFormatPcm);
  WriteLe<uint16_t>(os, 1);
  WriteLe<uint32_t>(os, static_cast<uint32_t>(wave.sample_rate));
  WriteLe<uint32_t>(os, static_cast<uint32_t>(wave.sample_rate) * 2);
  WriteLe<uint16_t>(os, 2);
  WriteLe<uint16_t>(os, 16);
  os.write("data", 4);
  WriteLe<uint32_t>(os, data_bytes);
  constexpr float kMax = 1.0f - 1.0f / 32768.0f;
  for (float s : wave.samples) {
    float c = std::clamp(s, -1.0f, kMax);
    auto q = static_cast<int32_t>(std::lround(c * 32768.0f));
    WriteLe<int16_t>(os, static_cast<int16_t>(std::clamp(q, -32768, 32767)));
  }
  if (!os) throw std::runtime_error("failed writing wav file: " + path);
}

}  // namespace dvae
