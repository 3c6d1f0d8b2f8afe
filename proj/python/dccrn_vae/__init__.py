# Copyright 2026 The DCCRN-VAE Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Complex-valued VAE speech enhancement (C++ core bindings)."""

from dccrn_vae._core import (
    build_dataset,
    enhance,
    gen_noise,
    gen_speech,
    istft,
    kl_analytic,
    mix_at_snr,
    sample_cgd,
    self_test,
    si_snr,
    stft,
    stoi,
    third_octave_bands,
)

__all__ = [
    "build_dataset",
    "enhance",
    "gen_noise",
    "gen_speech",
    "istft",
    "kl_analytic",
    "mix_at_snr",
    "sample_cgd",
    "self_test",
    "si_snr",
    "stft",
    "stoi",
    "third_octave_bands",
]
