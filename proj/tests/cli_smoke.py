# Copyright 2026 The vinr Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the vinr command-line tool."""

import csv
import json
import math
import pathlib
import struct
import subprocess
import sys
import tempfile

VINR = sys.argv[1]
failures = []


def check(name, ok):
    print(("ok   " if ok else "FAIL ") + name)
    if not ok:
        failures.append(name)


def run(*args, cwd):
    return subprocess.run([VINR, *map(str, args)], cwd=cwd, capture_output=True, text=True)


def write_ppm(path, size, phase):
    pixels = bytearray()
    for r in range(size):
        for c in range(size):
            x, y = c / size, r / size
            for v in (math.sin(3 * x + phase), math.cos(2 * y + x), 2 * x * y - 1):
                pixels.append(int(round((0.4 * v + 0.5) * 255)))
    path.write_bytes(b"P6\n%d %d\n255\n" % (size, size) + bytes(pixels))


TINY = ["--layers", 2, "--hidden", 8, "--fourier", 8, "--lr", 1e-2, "--seed", 7]
CODEC = ["--fit-iters", 10000, "--lr", 1e-3, "--seed", 3]

with tempfile.TemporaryDirectory() as tmp:
    d = pathlib.Path(tmp)
    (d / "data").mkdir()
    (d / "empty").mkdir()
    for i in range(3):
        write_ppm(d / "data" / f"img{i}.ppm", 8, i)

    r = run("train-prior", "--data", "data", "--out", "x.prior", cwd=d)
    check("missing --beta is a usage error", r.returncode == 2)
    r = run("train-prior", "--data", "empty", "--out", "x.prior", "--beta", 1, cwd=d)
    check("empty data directory is a usage error", r.returncode == 2)
    r = run("compress", "--input", "data/img0.ppm", "--prior", "nothing", "--out", "c", cwd=d)
    check("missing prior file is a usage error", r.returncode == 2)

    r = run("train-prior", "--data", "data", "--out", "big.prior", "--beta", 1e-3,
            "--epochs", 1, "--iters-per-epoch", 1, "--first-epoch-iters", 1, cwd=d)
    manifest = json.loads((d / "big.prior.json").read_text())
    check("default architecture has 1123 parameters",
          r.returncode == 0 and manifest["config"]["parameters"] == 1123)

    r = run("train-prior", "--data", "data", "--out", "a.prior", "--beta", 1e-3, "--epochs", 4,
            "--iters-per-epoch", 60, "--first-epoch-iters", 150, *TINY, cwd=d)
    check("train-prior succeeds", r.returncode == 0 and (d / "a.prior").exists())
    manifest = json.loads((d / "a.prior.json").read_text())
    check("prior manifest reports c_beta", manifest["c_beta_bits"] > 0)

    (d / "b.toml").write_text("[train-prior]\nepochs = 2\nbeta = 5.0\nlayers = 2\n"
                              "hidden = 8\nfourier = 8\nlr = 0.01\n")
    r = run("--config", "b.toml", "train-prior", "--data", "data", "--out", "b.prior",
            "--beta", 3e-2, "--iters-per-epoch", 30, "--first-epoch-iters", 50, cwd=d)
    manifest = json.loads((d / "b.prior.json").read_text())
    check("config file is read and flags take precedence",
          r.returncode == 0 and manifest["schedule"]["epochs"] == 2
          and manifest["schedule"]["beta"] == 3e-2)

    r = run("compress", "--input", "data/img0.ppm", "--prior", "a.prior", "--out", "c.bin",
            "--recon", "enc.ppm", *CODEC, cwd=d)
    check("compress succeeds", r.returncode == 0)
    enc = json.loads((d / "c.bin.json").read_text())
    r = run("decompress", "--input", "c.bin", "--prior", "a.prior", "--out", "dec.ppm",
            "--reference", "data/img0.ppm", cwd=d)
    dec = json.loads((d / "dec.ppm.json").read_text())
    check("decompress succeeds", r.returncode == 0)
    check("decoded file equals encoder reconstruction",
          (d / "enc.ppm").read_bytes() == (d / "dec.ppm").read_bytes())
    check("both sides report the same psnr",
          enc["metrics"]["psnr_db"] == dec["metrics"]["psnr_db"])
    blocks = enc["blocks"]
    check("manifest lists one delta per block",
          len(blocks["delta_bits"]) == blocks["count"] and blocks["count"] > 0)
    check("payload is the sum of index widths",
          blocks["payload_bits"] == sum(blocks["index_widths"]))
    check("manifest splits timings",
          {"posterior_fitting_s", "rec_and_fine_tuning_s"} <= enc["timings"].keys())

    r = run("decompress", "--input", "c.bin", "--prior", "b.prior", "--out", "x.ppm", cwd=d)
    check("wrong prior exits with 1", r.returncode == 1)
    raw = bytearray((d / "c.bin").read_bytes())
    raw[len(raw) // 2] ^= 0x10
    (d / "bad.bin").write_bytes(bytes(raw))
    r = run("decompress", "--input", "bad.bin", "--prior", "a.prior", "--out", "x.ppm", cwd=d)
    check("damaged stream exits with 1", r.returncode == 1)

    payload = []
    for t in (0, 2):
        r = run("compress", "--input", "data/img1.ppm", "--prior", "a.prior", "--out",
                f"t{t}.bin", "--fine-tune-iters", 0, "--t", t, *CODEC, cwd=d)
        payload.append(json.loads((d / f"t{t}.bin.json").read_text())["blocks"])
    check("--t 2 adds two bits per block",
          r.returncode == 0
          and payload[1]["payload_bits"] == payload[0]["payload_bits"] + 2 * payload[0]["count"])

    def curve(name):
        r = run("rd-curve", "--input", "data/img0.ppm", "--prior", "a.prior", "--prior",
                "b.prior", "--out", name, "--jobs", 2, *CODEC, cwd=d)
        with open(d / name) as f:
            return r.returncode, list(csv.reader(f))

    code, rows = curve("rd1.csv")
    check("rd-curve header",
          rows[0] == ["datum", "beta", "bits", "bpp", "psnr_db", "encode_s", "decode_s"])
    check("rd-curve has one row per prior", code == 0 and len(rows) == 3)
    by_beta = sorted((float(r[1]), float(r[3])) for r in rows[1:])
    check("bpp does not increase with beta", by_beta[0][1] >= by_beta[1][1])
    _, again = curve("rd2.csv")
    check("rd-curve is deterministic apart from timings",
          [r[:5] for r in rows] == [r[:5] for r in again])
    r = run("rd-curve", "--input", "empty", "--prior", "a.prior", "--out", "e.csv", cwd=d)
    check("rd-curve without inputs fails", r.returncode == 2)

sys.exit(1 if failures else 0)
