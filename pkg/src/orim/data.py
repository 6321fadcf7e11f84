"""Datasets: IDX ingestion, rotated splits, analytic test images, PGM I/O."""

from __future__ import annotations

import enum
import gzip
import os
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from orim.errors import DomainError, IDXFormatError, PairingError, TruncatedFileError
from orim.transforms import rotate_bilinear

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class Split(enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    split: Split = Split.TRAIN
    rotation_seed: int | None = None
    n_classes: int = 10

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise PairingError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DomainError("labels out of range")

    def __len__(self):
        return len(self.labels)

    @property
    def size(self) -> int:
        return self.images.shape[1]


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_idx(path, expected_magic, ndim):
    raw = _read_bytes(path)
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(path, header, len(raw))
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected_magic:
        raise IDXFormatError(
            f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    n_bytes = int(np.prod(dims))
    if len(raw) - header < n_bytes:
        raise TruncatedFileError(path, header + n_bytes, len(raw))
    return np.frombuffer(raw, dtype=np.uint8, count=n_bytes, offset=header).reshape(dims)


def load_idx(images_path, labels_path, split=Split.TRAIN) -> Dataset:
    """Read an IDX image/label pair; pixels are scaled to [0, 1]."""
    images = _parse_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _parse_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if len(images) != len(labels):
        raise PairingError(
            f"{images_path} holds {len(images)} images but "
            f"{labels_path} holds {len(labels)} labels"
        )
    return Dataset(images.astype(np.float64) / 255.0, labels.astype(np.int64), Split(split))


def write_idx(images, labels, images_path, labels_path):
    """Write uint8 images ``(N, H, W)`` and labels ``(N,)`` as IDX."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    for path, magic, arr in (
        (images_path, IDX_IMAGES_MAGIC, images),
        (labels_path, IDX_LABELS_MAGIC, labels),
    ):
        payload = struct.pack(">I", magic) + struct.pack(f">{arr.ndim}I", *arr.shape) + arr.tobytes()
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "wb") as fh:
            fh.write(payload)


def default_data_dir() -> Path:
    env = os.environ.get("ORIM_DATA_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "data" / "mnist"


def load_mnist(data_dir=None) -> Dataset:
    """Load ``images-idx3-ubyte[.gz]`` / ``labels-idx1-ubyte[.gz]`` from a directory.

    The standard MNIST training file names are accepted as well.
    """
    data_dir = Path(data_dir) if data_dir else default_data_dir()
    stems = [("images-idx3-ubyte", "labels-idx1-ubyte"),
             ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")]
    for img, lab in stems:
        for ext in ("", ".gz"):
            ip, lp = data_dir / (img + ext), data_dir / (lab + ext)
            if ip.exists() and lp.exists():
                return load_idx(ip, lp)
    raise FileNotFoundError(f"no IDX image/label pair found in {data_dir}")


def pad_images(images, size=32) -> np.ndarray:
    """Zero-pad ``(N, m, m)`` images symmetrically to ``size x size``."""
    images = np.asarray(images)
    m = images.shape[1]
    if m == size:
        return images
    lo = (size - m) // 2
    out = np.zeros((images.shape[0], size, size), dtype=images.dtype)
    out[:, lo:lo + m, lo:lo + m] = images
    return out


def split_dataset(ds: Dataset, n_train, n_val, n_test, seed=0, pad_to=32):
    """Deterministic disjoint train/val/test subsample.

    Test images are rotated by independent uniform angles; train and val stay
    upright.
    """
    total = n_train + n_val + n_test
    if total > len(ds):
        raise DomainError(f"requested {total} samples but dataset has {len(ds)}")
    perm = np.random.default_rng(seed).permutation(len(ds))
    images = pad_images(ds.images, pad_to) if pad_to else ds.images
    parts = []
    bounds = np.cumsum([0, n_train, n_val, n_test])
    for split, lo, hi in zip(Split, bounds[:-1], bounds[1:]):
        idx = np.sort(perm[lo:hi])
        parts.append(Dataset(images[idx], ds.labels[idx], split, None, ds.n_classes))
    train, val, test = parts
    return train, val, make_rotated_split(test, seed + 1)


def rotation_angles(n: int, seed) -> np.ndarray:
    """The angles, uniform on [0, 2 pi), that :func:`make_rotated_split` applies."""
    return np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, size=n)


def make_rotated_split(ds: Dataset, seed) -> Dataset:
    angles = rotation_angles(len(ds), seed)
    rotated = np.stack([rotate_bilinear(img, a) for img, a in zip(ds.images, angles)]) \
        if len(ds) else ds.images.copy()
    return replace(ds, images=rotated.astype(ds.images.dtype), rotation_seed=seed)


class SynthKind(enum.Enum):
    CONSTANT_ONE = "constant"
    RADIAL_POWER = "radial"
    GAUSSIAN_BLOB = "blob"
    CHECKER = "checker"


def synth_function(kind, M, **params):
    """Analytic image ``f(x, y)`` in unit-disk coordinates (inner disk, D = M).

    Pixel-unit parameters (blob centre and width) are converted through the
    inverse of the pixel-to-disk mapping.
    """
    kind = SynthKind(kind)
    if kind is SynthKind.CONSTANT_ONE:
        return lambda x, y: np.ones(np.broadcast(x, y).shape)
    if kind is SynthKind.RADIAL_POWER:
        n = params.get("n", 2)
        return lambda x, y: np.sqrt(x * x + y * y) ** n
    if kind is SynthKind.GAUSSIAN_BLOB:
        c = (M - 1) / 2.0
        cx, cy = params.get("cx", c), params.get("cy", c)
        sigma = params.get("sigma", M / 16)
        if sigma <= 0:
            raise DomainError("sigma must be positive")

        def blob(x, y):
            s = (np.asarray(x) * M + M - 1) / 2.0
            t = (np.asarray(y) * M + M - 1) / 2.0
            return np.exp(-((s - cx) ** 2 + (t - cy) ** 2) / (2.0 * sigma**2))

        return blob
    period = params.get("period", 8)

    def checker(x, y):
        s = np.floor((np.asarray(x) * M + M) / 2.0)
        t = np.floor((np.asarray(y) * M + M) / 2.0)
        return (((s // (period / 2)) + (t // (period / 2))) % 2).astype(np.float64)

    return checker


def synth_image(kind, M, **params) -> np.ndarray:
    """Sample :func:`synth_function` at the ``M x M`` pixel centres."""
    c = (2.0 * np.arange(M) + 1.0 - M) / M
    x, y = np.meshgrid(c, c, indexing="ij")
    return synth_function(kind, M, **params)(x, y)


def read_pgm(path) -> np.ndarray:
    """Binary 8-bit PGM (P5) scaled to [0, 1]; rows map to axis 0."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise IDXFormatError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise IDXFormatError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 256:
        raise IDXFormatError(f"{path}: only 8-bit PGM is supported")
    pos += 1
    data = raw[pos:pos + width * height]
    if len(data) < width * height:
        raise TruncatedFileError(path, pos + width * height, len(raw))
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width) / float(maxval)


def write_pgm(path, image):
    """Write an image in [0, 1] as 8-bit P5."""
    arr = np.clip(np.round(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    h, w = arr.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes())
