"""Mapping of square pixel grids onto the unit disk.

Pixel ``(s, t)`` is addressed as ``image[s, t]``; ``s`` runs along axis 0 and
maps to the disk coordinate ``x``, ``t`` runs along axis 1 and maps to ``y``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from orim.errors import InvalidSizeError


class DiskMode(enum.Enum):
    INNER = "inner"
    OUTER = "outer"

    @classmethod
    def parse(cls, value) -> "DiskMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class Centroid:
    cx: float
    cy: float


@dataclass(frozen=True, eq=False)
class UnitDiskGrid:
    """Per-pixel polar coordinates of an ``M x M`` grid.

    ``x``, ``y``, ``r`` and ``theta`` are full ``(M, M)`` arrays; ``r`` and
    ``theta`` are zero outside ``mask``. ``theta`` lies in ``[0, 2*pi)``.
    """

    size: int
    disk_mode: DiskMode
    D: float
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    mask: np.ndarray
    centroid: Centroid | None = None

    @property
    def delta(self) -> float:
        return 2.0 / self.D

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())

    def masked_polar(self):
        """Return ``(r, theta)`` of the masked pixels in row-major order."""
        return self.r[self.mask], self.theta[self.mask]


def _scale(M: int, disk_mode: DiskMode) -> float:
    return float(M) if disk_mode is DiskMode.INNER else M * np.sqrt(2.0)


def _finish(M, disk_mode, D, xs, ys, centroid=None) -> UnitDiskGrid:
    x, y = np.meshgrid(xs, ys, indexing="ij")
    rsq = x * x + y * y
    mask = rsq <= 1.0
    if disk_mode is DiskMode.OUTER and centroid is None:
        # Corner pixel centres sit at rsq = ((M-1)/M)^2 < 1 analytically;
        # guard against rounding pushing them out.
        mask[:] = True
    r = np.where(mask, np.sqrt(rsq), 0.0)
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0.0, theta + 2.0 * np.pi, theta)
    theta = np.where(mask, theta, 0.0)
    for a in (x, y, r, theta, mask):
        a.setflags(write=False)
    return UnitDiskGrid(M, disk_mode, D, x, y, r, theta, mask, centroid)


def _check_size(M) -> int:
    if int(M) != M or M < 2:
        raise InvalidSizeError(f"grid size must be an integer >= 2, got {M!r}")
    return int(M)


def build_grid(M: int, disk_mode=DiskMode.INNER) -> UnitDiskGrid:
    """Centre-mapped grid: ``x_s = (2s + 1 - M) / D``."""
    M = _check_size(M)
    disk_mode = DiskMode.parse(disk_mode)
    D = _scale(M, disk_mode)
    c = (2.0 * np.arange(M) + 1.0 - M) / D
    return _finish(M, disk_mode, D, c, c)


def compute_centroid(image) -> Centroid:
    """Mass-weighted mean pixel index; geometric centre for zero mass."""
    image = np.asarray(image, dtype=np.float64)
    M = image.shape[0]
    total = image.sum()
    if not total > 0.0:
        c = (M - 1) / 2.0
        return Centroid(c, c)
    idx = np.arange(M, dtype=np.float64)
    cx = (image.sum(axis=1) @ idx) / total
    cy = (image.sum(axis=0) @ idx) / total
    return Centroid(float(cx), float(cy))


def build_centered_grid(M: int, disk_mode, centroid: Centroid) -> UnitDiskGrid:
    """Grid whose origin sits on ``centroid`` (pixel-index units).

    ``x_s = (2s + 1 - x') / D`` with ``x' = 2*cx + 1``, so a centroid at the
    geometric centre ``(M-1)/2`` reproduces :func:`build_grid` exactly.
    """
    M = _check_size(M)
    disk_mode = DiskMode.parse(disk_mode)
    D = _scale(M, disk_mode)
    s = np.arange(M, dtype=np.float64)
    xs = (2.0 * s + 1.0 - (2.0 * centroid.cx + 1.0)) / D
    ys = (2.0 * s + 1.0 - (2.0 * centroid.cy + 1.0)) / D
    centre = (M - 1) / 2.0
    if centroid.cx == centre and centroid.cy == centre:
        return build_grid(M, disk_mode)
    return _finish(M, disk_mode, D, xs, ys, centroid)
