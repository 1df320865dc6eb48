"""Write the scikit-learn 8x8 digits as IDX files (pixels rescaled from 0..16 to 0..255)."""

import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_idx(path: pathlib.Path, array: np.ndarray) -> None:
    magic = 0x0800 | array.ndim
    with path.open("wb") as f:
        f.write(struct.pack(">I", magic))
        for d in array.shape:
            f.write(struct.pack(">I", d))
        f.write(array.astype(np.uint8).tobytes())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "tests" / "data")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    images = np.rint(digits.images * (255.0 / 16.0)).clip(0, 255).astype(np.uint8)
    write_idx(args.out / "digits8x8-images-idx3-ubyte", images)
    write_idx(args.out / "digits8x8-labels-idx1-ubyte", digits.target.astype(np.uint8))
    print(f"{images.shape[0]} images written to {args.out}")


if __name__ == "__main__":
    main()
