"""Export the UCI handwritten digits (as bundled with scikit-learn) to IDX files.

The images are 8x8 with intensities 0..16; they are rescaled to 0..255 and
written with magic 0x00000803 (images) / 0x00000801 (labels). The Rust side
upsamples them to 28x28 when an MNIST-shaped input is needed.
"""
import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def main(out_dir: Path) -> None:
    digits = load_digits()
    images = np.clip(np.rint(digits.images * 255.0 / 16.0), 0, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    n, rows, cols = images.shape
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "digits8x8-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())
    with open(out_dir / "digits8x8-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.tobytes())
    print(f"wrote {n} images to {out_dir}")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/data"))
