"""Geometric image transforms and quantitative invariance checks.

Rotations follow ``O_alpha(r, theta) = O(r, theta + alpha)``, the convention
under which the moment phase relation reads
``OM(O) = OM(O_alpha) * exp(-i q alpha)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from orim.basis import MomentBasis, MomentSpec
from orim.errors import DomainError
from orim.moments import compute_central_moments, compute_moments
from orim.unit_disk import DiskMode, build_grid


class Kind(enum.Enum):
    ROTATE90K = "rotate90k"
    ROTATE_ARBITRARY = "rotate"
    FLIP_HORIZONTAL = "flip_h"
    FLIP_VERTICAL = "flip_v"
    TRANSLATE_INTEGER = "translate"


class Interpolation(enum.Enum):
    NONE = "none"
    BILINEAR = "bilinear"


@dataclass(frozen=True)
class TransformSpec:
    kind: Kind
    k: int = 0
    alpha: float = 0.0
    shift: tuple[int, int] = (0, 0)
    interpolation: Interpolation = Interpolation.NONE

    def __post_init__(self):
        bilinear = self.interpolation is Interpolation.BILINEAR
        if (self.kind is Kind.ROTATE_ARBITRARY) != bilinear:
            raise DomainError(
                "arbitrary rotation requires bilinear interpolation; "
                "grid-exact transforms require none"
            )
        if self.kind is Kind.ROTATE90K and self.k not in (0, 1, 2, 3):
            raise DomainError("Rotate90k needs k in {0, 1, 2, 3}")

    @classmethod
    def rotate90(cls, k):
        return cls(Kind.ROTATE90K, k=k)

    @classmethod
    def rotate(cls, alpha):
        return cls(Kind.ROTATE_ARBITRARY, alpha=float(alpha), interpolation=Interpolation.BILINEAR)

    @classmethod
    def flip_h(cls):
        return cls(Kind.FLIP_HORIZONTAL)

    @classmethod
    def flip_v(cls):
        return cls(Kind.FLIP_VERTICAL)

    @classmethod
    def translate(cls, ds, dt):
        return cls(Kind.TRANSLATE_INTEGER, shift=(int(ds), int(dt)))


def rotate_bilinear(image, alpha: float) -> np.ndarray:
    """Rotate about the image centre; samples outside the image read as 0."""
    image = np.asarray(image, dtype=np.float64)
    M0, M1 = image.shape
    c0, c1 = (M0 - 1) / 2.0, (M1 - 1) / 2.0
    s, t = np.meshgrid(np.arange(M0) - c0, np.arange(M1) - c1, indexing="ij")
    ca, sa = np.cos(alpha), np.sin(alpha)
    src_s = ca * s - sa * t + c0
    src_t = sa * s + ca * t + c1
    i0 = np.floor(src_s).astype(np.int64)
    j0 = np.floor(src_t).astype(np.int64)
    fs = src_s - i0
    ft = src_t - j0
    padded = np.zeros((M0 + 2, M1 + 2))
    padded[1:-1, 1:-1] = image

    def tap(i, j):
        ok = (i >= -1) & (i <= M0) & (j >= -1) & (j <= M1)
        return np.where(ok, padded[np.clip(i + 1, 0, M0 + 1), np.clip(j + 1, 0, M1 + 1)], 0.0)

    return (
        (1 - fs) * (1 - ft) * tap(i0, j0)
        + fs * (1 - ft) * tap(i0 + 1, j0)
        + (1 - fs) * ft * tap(i0, j0 + 1)
        + fs * ft * tap(i0 + 1, j0 + 1)
    )


def translate(image, ds: int, dt: int) -> np.ndarray:
    image = np.asarray(image)
    out = np.zeros_like(image)
    M0, M1 = image.shape
    if abs(ds) >= M0 or abs(dt) >= M1:
        return out
    dst = (slice(max(ds, 0), M0 + min(ds, 0)), slice(max(dt, 0), M1 + min(dt, 0)))
    src = (slice(max(-ds, 0), M0 + min(-ds, 0)), slice(max(-dt, 0), M1 + min(-dt, 0)))
    out[dst] = image[src]
    return out


def apply(image, t: TransformSpec) -> np.ndarray:
    image = np.asarray(image)
    if t.kind is Kind.ROTATE90K:
        return np.rot90(image, -t.k).copy()
    if t.kind is Kind.FLIP_HORIZONTAL:
        return image[::-1, :].copy()
    if t.kind is Kind.FLIP_VERTICAL:
        return image[:, ::-1].copy()
    if t.kind is Kind.TRANSLATE_INTEGER:
        return translate(image, *t.shift)
    return rotate_bilinear(image, t.alpha)


def _rel(residual, reference) -> float:
    scale = np.max(np.abs(reference)) if np.size(reference) else 0.0
    worst = np.max(np.abs(residual)) if np.size(residual) else 0.0
    if scale == 0.0:
        return float(worst)
    return float(worst / scale)


@dataclass
class RelationResult:
    pairs: list
    residuals: np.ndarray
    magnitude_residuals: np.ndarray
    reference: np.ndarray

    @property
    def max_relative(self) -> float:
        return _rel(self.residuals, self.reference)

    @property
    def max_relative_magnitude(self) -> float:
        return _rel(self.magnitude_residuals, self.reference)


def check_rotation_relation(image, alpha: float, basis: MomentBasis) -> RelationResult:
    """Residuals of ``OM(O) - OM(O_alpha) exp(-i q alpha)``.

    Quarter-turn angles use the grid-exact rotation; anything else is
    resampled bilinearly.
    """
    k = alpha / (np.pi / 2)
    if np.isclose(k, round(k), rtol=0, atol=1e-12):
        t = TransformSpec.rotate90(int(round(k)) % 4)
    else:
        t = TransformSpec.rotate(alpha)
    om = compute_moments(image, basis).values
    om_rot = compute_moments(apply(image, t), basis).values
    q = np.array([q for _, q in basis.pairs])
    res = om - om_rot * np.exp(-1j * q * alpha)
    return RelationResult(basis.pairs, res, np.abs(om) - np.abs(om_rot), om)


@dataclass
class ReflectionResult:
    pairs: list
    horizontal: np.ndarray
    vertical: np.ndarray
    reference: np.ndarray

    @property
    def max_relative(self) -> float:
        return max(_rel(self.horizontal, self.reference), _rel(self.vertical, self.reference))


def check_reflection_relation(image, basis: MomentBasis) -> ReflectionResult:
    om = compute_moments(image, basis).values
    q = np.array([q for _, q in basis.pairs])
    hf = compute_moments(apply(image, TransformSpec.flip_h()), basis).values
    vf = compute_moments(apply(image, TransformSpec.flip_v()), basis).values
    return ReflectionResult(
        basis.pairs,
        hf - (-1.0) ** q * np.conj(om),
        vf - np.conj(om),
        om,
    )


@dataclass
class TranslationResult:
    shift: tuple
    supported: bool
    deviation: float
    reason: str = ""


def _support_inside_disk(image, disk_mode, rel_threshold=1e-6) -> bool:
    grid = build_grid(image.shape[0], disk_mode)
    peak = np.max(np.abs(image))
    if peak == 0:
        return True
    support = np.abs(image) > rel_threshold * peak
    return not np.any(support & ~grid.mask)


def check_translation_invariance(image, shifts, spec: MomentSpec,
                                 disk_mode=DiskMode.INNER) -> list[TranslationResult]:
    """Relative deviation ``||m(shifted) - m(orig)||_inf / ||m(orig)||_inf``.

    ``m`` is the central-moment magnitude vector. A shift that drops mass off
    the image or carries the support (pixels above 1e-6 of the peak) outside
    the inscribed disk is reported unsupported rather than scored. Mass loss
    is judged at 1e-9 of the total so that clipped far tails of a smooth blob
    (around 1e-12 of the mass) do not disqualify a shift.
    """
    image = np.asarray(image, dtype=np.float64)
    base = np.abs(compute_central_moments(image, spec, disk_mode).values)
    out = []
    for ds, dt in shifts:
        moved = translate(image, ds, dt)
        lost = abs(moved.sum() - image.sum()) > 1e-9 * max(abs(image.sum()), 1.0)
        if lost or not _support_inside_disk(moved, disk_mode):
            out.append(TranslationResult((ds, dt), False, float("nan"),
                                         "shifted support leaves the unit disk"))
            continue
        mags = np.abs(compute_central_moments(moved, spec, disk_mode).values)
        out.append(TranslationResult((ds, dt), True, _rel(mags - base, base)))
    return out
