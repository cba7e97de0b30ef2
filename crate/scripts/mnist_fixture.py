"""Repackage digits from the `mnist` npm package as IDX files.

Usage: python3 mnist_fixture.py <npm-package-dir> <out-dir> [per-digit]

The npm package stores each digit class as JSON with pixel values already
divided by 255 and rounded to three decimals; multiplying back by 255 and
rounding recovers the original bytes to within one grey level.
"""
import json
import struct
import sys
from pathlib import Path


def main():
    src = Path(sys.argv[1]) / "src" / "digits"
    out = Path(sys.argv[2])
    per_digit = int(sys.argv[3]) if len(sys.argv) > 3 else 250
    out.mkdir(parents=True, exist_ok=True)

    classes = []
    for d in range(10):
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        images = [flat[i * 784:(i + 1) * 784] for i in range(len(flat) // 784)]
        classes.append(images[:per_digit])

    pixels = bytearray()
    labels = bytearray()
    # interleave classes so the file is not sorted by label
    for i in range(per_digit):
        for d in range(10):
            pixels.extend(max(0, min(255, round(v * 255))) for v in classes[d][i])
            labels.append(d)

    n = len(labels)
    (out / "train-images-idx3-ubyte").write_bytes(struct.pack(">IIII", 2051, n, 28, 28) + pixels)
    (out / "train-labels-idx1-ubyte").write_bytes(struct.pack(">II", 2049, n) + labels)
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
