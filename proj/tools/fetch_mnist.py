#!/usr/bin/env python3
"""Build MNIST IDX files from the digit JSON shipped in the `mnist` npm package.

The package carries the 10000 MNIST test digits grouped by class as flat
28x28 float arrays. Classes are interleaved by relative position within their
group, so any prefix split keeps roughly the test-set class proportions.

    python3 tools/fetch_mnist.py --out data/mnist
    python3 tools/fetch_mnist.py --package /path/to/unpacked/mnist --out data/mnist
"""

import argparse
import json
import pathlib
import struct
import subprocess
import sys
import tarfile
import tempfile

SIDE = 28


def locate_package(explicit, workdir):
    if explicit:
        return pathlib.Path(explicit)
    subprocess.run(["npm", "pack", "mnist@1.1.0", "--silent"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tgz = next(pathlib.Path(workdir).glob("mnist-*.tgz"))
    with tarfile.open(tgz) as t:
        t.extractall(workdir, filter="data")
    return pathlib.Path(workdir) / "package"


def load_class(pkg, digit):
    data = json.loads((pkg / "src" / "digits" / f"{digit}.json").read_text())["data"]
    n = len(data) // (SIDE * SIDE)
    if n == 0:
        sys.exit(f"digit {digit}: no images")
    return [data[k * SIDE * SIDE:(k + 1) * SIDE * SIDE] for k in range(n)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--package", help="unpacked npm package directory (default: npm pack)")
    ap.add_argument("--out", default="data/mnist")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        pkg = locate_package(args.package, tmp)
        classes = [load_class(pkg, d) for d in range(10)]

    images = bytearray()
    labels = bytearray()
    order = sorted((k / len(classes[d]), d, k) for d in range(10) for k in range(len(classes[d])))
    for _, d, k in order:
        images += bytes(min(255, max(0, round(x * 255))) for x in classes[d][k])
        labels.append(d)
    n = len(labels)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "images.idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, n, SIDE, SIDE) + images)
    (out / "labels.idx1-ubyte").write_bytes(struct.pack(">II", 0x801, n) + labels)
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
