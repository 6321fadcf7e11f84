"""Convert the digit JSON files of the npm ``mnist`` package to gzipped IDX.

The package (MIT licensed) ships 10,000 MNIST digits as flat arrays of
784 pixel intensities in [0, 1] per class file ``src/digits/<d>.json``.

    npm pack mnist && tar xzf mnist-*.tgz
    python tools/mnist_from_npm.py package/src/digits data/mnist
"""

import argparse
import json
from pathlib import Path

import numpy as np

from orim.data import write_idx


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args(argv)

    images, labels = [], []
    for digit in range(10):
        flat = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        arr = np.asarray(flat, dtype=np.float64).reshape(-1, 28, 28)
        images.append(np.round(arr * 255.0).astype(np.uint8))
        labels.append(np.full(len(arr), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    # interleave classes so that file order carries no label structure
    order = np.random.default_rng(0).permutation(len(labels))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(images[order], labels[order],
              args.out_dir / "images-idx3-ubyte.gz",
              args.out_dir / "labels-idx1-ubyte.gz")
    print(f"wrote {len(labels)} digits to {args.out_dir}")


if __name__ == "__main__":
    main()
