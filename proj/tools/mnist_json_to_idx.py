#!/usr/bin/env python3
"""Convert the digit JSON files of the `mnist` npm package into IDX files.

Each <digit>.json holds {"data": [...]} with 784 floats per image, equal to
byte / 255 rounded to three decimals, so round(v * 255) recovers the byte.
The first (1 - test_fraction) of every digit's images go to the train split,
the rest to the test split; both splits are digit-interleaved.
"""

import argparse
import json
import struct
from pathlib import Path

PIXELS = 784


def load_digit(path: Path) -> list[bytes]:
    data = json.loads(path.read_text())["data"]
    if len(data) % PIXELS:
        raise SystemExit(f"{path}: {len(data)} values is not a multiple of {PIXELS}")
    images = []
    for start in range(0, len(data), PIXELS):
        px = bytes(min(255, max(0, round(v * 255))) for v in data[start:start + PIXELS])
        images.append(px)
    return images


def interleave(per_digit: dict[int, list[bytes]]) -> tuple[list[bytes], list[int]]:
    images, labels = [], []
    longest = max(len(v) for v in per_digit.values())
    for i in range(longest):
        for digit in sorted(per_digit):
            if i < len(per_digit[digit]):
                images.append(per_digit[digit][i])
                labels.append(digit)
    return images, labels


def write_split(out: Path, prefix: str, images: list[bytes], labels: list[int]) -> None:
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path, help="directory with 0.json .. 9.json")
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--test-fraction", type=float, default=0.2)
    args = ap.parse_args()

    train, test = {}, {}
    for digit in range(10):
        images = load_digit(args.digits_dir / f"{digit}.json")
        cut = len(images) - round(len(images) * args.test_fraction)
        train[digit] = images[:cut]
        test[digit] = images[cut:]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_split(args.out_dir, "train", *interleave(train))
    write_split(args.out_dir, "t10k", *interleave(test))
    print(f"wrote {sum(map(len, train.values()))} train / {sum(map(len, test.values()))} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
