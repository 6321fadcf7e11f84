"""Discrete orthogonal moments and their magnitude invariants.

``OM_pq = delta^2 * sum_px image(px) * kernel_pq(px)`` over masked pixels,
where ``delta = 2 / D`` is the pixel side on the unit disk. Including the
elemental area makes the sum a quadrature of the continuous moment, so values
are comparable across resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from orim.basis import MomentBasis, MomentSpec, build_basis, enumerate_pairs
from orim.errors import DimensionError
from orim.unit_disk import (
    DiskMode,
    build_centered_grid,
    build_grid,
    compute_centroid,
)


@dataclass(frozen=True, eq=False)
class MomentVector:
    spec: MomentSpec
    pairs: list
    values: np.ndarray
    source_size: int

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class InvariantFeatures:
    """Non-negative magnitudes, ``n_channels`` blocks of ``len(pairs)``."""

    spec: MomentSpec
    pairs: list
    magnitudes: np.ndarray
    n_channels: int = 1

    def __len__(self):
        return len(self.magnitudes)


def _check_image(image, M):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape != (M, M):
        raise DimensionError(f"expected a {M}x{M} image, got shape {image.shape}")
    return image


def moments_from_masked(values, basis: MomentBasis) -> np.ndarray:
    """Moments for pixel values already restricted to ``basis.grid.mask``.

    ``values`` is ``(..., n_masked)``; returns ``(..., n_pairs)`` complex.
    One real product against ``basis.real_stack`` gives real and imaginary
    parts together; the summation order is fixed for a given input shape.
    """
    P = basis.n_pairs
    prod = np.asarray(values, dtype=np.float64) @ basis.real_stack
    return basis.grid.delta**2 * (prod[..., :P] + 1j * prod[..., P:])


def compute_moments(image, basis: MomentBasis) -> MomentVector:
    image = _check_image(image, basis.grid.size)
    values = moments_from_masked(image[basis.grid.mask], basis)
    return MomentVector(basis.spec, basis.pairs, values, basis.grid.size)


def compute_central_moments(image, spec: MomentSpec, disk_mode=DiskMode.INNER) -> MomentVector:
    """Moments on a grid re-centred at the image centroid."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DimensionError(f"expected a square image, got shape {image.shape}")
    M = image.shape[0]
    grid = build_centered_grid(M, disk_mode, compute_centroid(image))
    return compute_moments(image, build_basis(spec, grid))


def magnitudes(mv: MomentVector) -> InvariantFeatures:
    return InvariantFeatures(mv.spec, mv.pairs, np.abs(mv.values), 1)


def extract_invariants(stack, spec: MomentSpec, central=False, disk_mode=DiskMode.INNER,
                       normalize=False) -> InvariantFeatures:
    """Magnitude features of every channel of an ``(M, M, F)`` stack.

    Output is channel-major: the block for channel ``f`` occupies
    ``[f * n_pairs, (f + 1) * n_pairs)``. ``normalize`` rescales the full
    vector to unit L2 norm (left off by default).
    """
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[:, :, None]
    if stack.ndim != 3 or stack.shape[0] != stack.shape[1] or stack.shape[2] < 1:
        raise DimensionError(f"expected an (M, M, F) stack, got shape {stack.shape}")
    M, _, F = stack.shape
    pairs = enumerate_pairs(spec)
    if central:
        blocks = [
            np.abs(compute_central_moments(stack[:, :, f], spec, disk_mode).values)
            for f in range(F)
        ]
        mags = np.concatenate(blocks) if blocks else np.zeros(0)
    else:
        basis = build_basis(spec, build_grid(M, disk_mode))
        chans = np.moveaxis(stack, 2, 0)[:, basis.grid.mask]
        mags = np.abs(moments_from_masked(chans, basis)).ravel()
    if normalize:
        norm = np.linalg.norm(mags)
        if norm > 0:
            mags = mags / norm
    return InvariantFeatures(spec, pairs, mags, F)
