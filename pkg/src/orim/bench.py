"""Throughput measurements for moment extraction."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from orim.basis import MomentSpec, build_basis
from orim.moments import compute_moments, moments_from_masked
from orim.unit_disk import DiskMode, build_grid


@dataclass
class BenchResult:
    family: str
    p_max: int
    size: int
    n_pairs: int
    iters: int
    batch: int
    seconds: float

    @property
    def moments_per_second(self) -> float:
        return self.iters * self.batch * self.n_pairs / self.seconds

    @property
    def seconds_per_coefficient(self) -> float:
        return self.seconds / (self.iters * self.batch * self.n_pairs)

    def as_dict(self) -> dict:
        return {
            "family": self.family, "p_max": self.p_max, "size": self.size,
            "n_pairs": self.n_pairs, "iters": self.iters, "batch": self.batch,
            "seconds": self.seconds, "moments_per_second": self.moments_per_second,
            "seconds_per_coefficient": self.seconds_per_coefficient,
        }


def bench_precomputed(family, p_max, size, iters=20, batch=64, seed=0,
                      disk_mode=DiskMode.INNER, repeats=3) -> BenchResult:
    """Time moment sums for ``batch`` images per call against a cached basis.

    Every call is timed on its own and ``seconds`` is ``iters`` times the
    median call, taken over ``iters * repeats`` calls. The median discards
    calls stretched by scheduler preemption on shared machines.
    """
    return bench_orders(family, [p_max], size, iters, batch, seed, disk_mode, repeats)[0]


def bench_orders(family, orders, size, iters=20, batch=64, seed=0,
                 disk_mode=DiskMode.INNER, repeats=3) -> list[BenchResult]:
    """:func:`bench_precomputed` for several orders with interleaved calls.

    Calls cycle through the orders, so a change in machine speed during the
    run affects every order alike instead of bending the cost curve.
    """
    grid = build_grid(size, disk_mode)
    specs = [MomentSpec(family, p) for p in orders]
    bases = [build_basis(spec, grid) for spec in specs]
    values = np.random.default_rng(seed).random((batch, grid.n_masked))
    for basis in bases:
        moments_from_masked(values, basis)  # warm-up
    calls = np.empty((iters * repeats, len(bases)))
    for i in range(calls.shape[0]):
        for j, basis in enumerate(bases):
            t0 = time.perf_counter()
            moments_from_masked(values, basis)
            calls[i, j] = time.perf_counter() - t0
    med = np.median(calls, axis=0)
    return [BenchResult(spec.family.value, spec.p_max, size, len(basis.pairs), iters, batch,
                        float(iters * m)) for spec, basis, m in zip(specs, bases, med)]


def bench_rebuild(family, p_max, size, n_images=5, seed=0) -> float:
    """Seconds per image when the basis is rebuilt for every image."""
    spec = MomentSpec(family, p_max)
    rng = np.random.default_rng(seed)
    images = rng.random((n_images, size, size))
    t0 = time.perf_counter()
    for img in images:
        compute_moments(img, build_basis(spec, build_grid(size)))
    return (time.perf_counter() - t0) / n_images


def bench_cached_single(family, p_max, size, n_images=50, seed=0) -> float:
    """Seconds per image through the public single-image path with a cached basis."""
    spec = MomentSpec(family, p_max)
    basis = build_basis(spec, build_grid(size))
    rng = np.random.default_rng(seed)
    images = rng.random((n_images, size, size))
    compute_moments(images[0], basis)
    t0 = time.perf_counter()
    for img in images:
        compute_moments(img, basis)
    return (time.perf_counter() - t0) / n_images


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of the least-squares line through ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / ss_tot) if ss_tot > 0 else 1.0
