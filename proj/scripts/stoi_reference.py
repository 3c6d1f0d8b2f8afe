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

"""Writes tests/data/stoi_reference.json from pystoi.

Signals come from the project's own generators (through the Python module)
so the C++ test can rebuild them bit for bit. Run from a build tree:

  PYTHONPATH=build/python python3 scripts/stoi_reference.py
"""

import json
import pathlib

import numpy as np
import pystoi
from pystoi import utils

import dccrn_vae as dv

CASES = [
    (1, "white", -10.0),
    (2, "pink", -5.0),
    (3, "modulated", 0.0),
    (4, "white", 5.0),
    (5, "pink", 10.0),
    (6, "modulated", 15.0),
    (7, "white", -2.5),
    (8, "pink", 2.5),
    (9, "modulated", 7.5),
    (10, "white", 20.0),
]
DURATION_S = 2.0


def main():
    signals = []
    for seed, kind, snr in CASES:
        x = dv.gen_speech(seed, DURATION_S)
        d = dv.gen_noise(kind, seed + 1000, DURATION_S)
        mix = dv.mix_at_snr(x, d, snr)
        value = pystoi.stoi(mix["clean"].astype(np.float64), mix["noisy"].astype(np.float64), 16000)
        signals.append({"seed": seed, "noise": kind, "snr_db": snr, "duration_s": DURATION_S,
                        "stoi": float(value)})
    obm, _ = utils.thirdoct(10000, 512, 15, 150)
    out = {"source": "pystoi " + getattr(pystoi, "__version__", "unknown"),
           "signals": signals,
           "obm": obm.tolist()}
    path = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "stoi_reference.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
