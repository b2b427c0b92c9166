#!/usr/bin/env python3
# Copyright 2026 The etaopt Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Materialize the bundled datasets under data/.

Boston housing comes from the CSV shipped inside scikit-learn 1.1.x wheels.
The MNIST subset (500 digits per class) comes from the CSV shipped inside
mlxtend wheels and is re-encoded as big-endian IDX files.
"""
import argparse
import glob
import gzip
import io
import os
import struct
import subprocess
import sys
import tempfile
import zipfile


def download_wheel(spec, dest):
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "--only-binary=:all:", spec, "-d", dest],
                          stdout=subprocess.DEVNULL)
    return glob.glob(os.path.join(dest, "*.whl"))[0]


def write_boston(wheel, out_dir):
    raw = zipfile.ZipFile(wheel).read("sklearn/datasets/data/boston_house_prices.csv").decode()
    lines = raw.splitlines()[1:]  # first line is "506,13,..." metadata
    header = ",".join(h.strip('"') for h in lines[0].split(","))
    with open(os.path.join(out_dir, "boston.csv"), "w") as f:
        f.write(header + "\n")
        for line in lines[1:]:
            if line.strip():
                f.write(line.strip() + "\n")


def write_mnist(wheel, out_dir):
    raw = gzip.decompress(zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    rows = [list(map(int, line.split(","))) for line in raw.splitlines() if line]
    # 784 pixels followed by the label
    n = len(rows)
    with open(os.path.join(out_dir, "mnist5k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for r in rows:
            f.write(bytes(r[:784]))
    with open(os.path.join(out_dir, "mnist5k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(r[784] for r in rows))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        write_boston(download_wheel("scikit-learn==1.1.3", os.path.join(tmp, "skl")), args.out)
        write_mnist(download_wheel("mlxtend==0.24.0", os.path.join(tmp, "mlx")), args.out)


if __name__ == "__main__":
    main()
