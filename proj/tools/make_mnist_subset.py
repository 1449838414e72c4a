"""Convert the 5000-image MNIST sample shipped with mlxtend into IDX files.

    pip download mlxtend --no-deps -d /tmp/mlx
    python tools/make_mnist_subset.py --wheel /tmp/mlx/mlxtend-*.whl --out data/mnist5k
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

CSV_IN_WHEEL = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(args):
    if args.csv:
        raw = pathlib.Path(args.csv).read_bytes()
    else:
        with zipfile.ZipFile(args.wheel) as zf:
            raw = zf.read(CSV_IN_WHEEL)
    table = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",", dtype=np.int64)
    return table[:, :-1].astype(np.uint8), table[:, -1].astype(np.uint8)


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--wheel")
    src.add_argument("--csv")
    ap.add_argument("--out", default="data/mnist5k")
    ap.add_argument("--n-test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    images, labels = read_rows(args)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    test, train = order[: args.n_test], order[args.n_test :]
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train", images[train], labels[train])
    write_idx(out / "t10k", images[test], labels[test])
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()
