"""Radial polynomials and precomputed complex kernel tables.

The three families share the normalisation ``lambda_p = (p + 1) / pi`` and
differ only in the radial factor. Each radial polynomial is a rescaled Jacobi
polynomial, which is what we evaluate::

    ZM   R_pq(r) = (-1)^((p-q)/2) r^q P_{(p-q)/2}^{(q, 0)}(1 - 2r^2)
    PZM  R_pq(r) = (-1)^(p-q)     r^q P_{p-q}^{(2q+1, 0)}(1 - 2r)
    OFMM R_p (r) = (-1)^p             P_p^{(1, 0)}(1 - 2r)

with ``q = |q|``. The three-term Jacobi recurrence is forward stable on
``[-1, 1]``; the expanded factorial sums cancel catastrophically for PZM and
OFMM once ``p`` reaches double digits.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from orim.errors import CappedOrderError, DomainError
from orim.unit_disk import UnitDiskGrid


class Family(enum.Enum):
    ZM = "zm"
    PZM = "pzm"
    OFMM = "ofmm"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]


_FAMILY_CODES = {Family.ZM: 0, Family.PZM: 1, Family.OFMM: 2}

STABILITY_CAP = {Family.ZM: 20, Family.PZM: 15, Family.OFMM: 15}


@dataclass(frozen=True)
class MomentSpec:
    family: Family
    p_max: int
    include_q_zero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if int(self.p_max) != self.p_max or self.p_max < 0:
            raise DomainError(f"p_max must be a non-negative integer, got {self.p_max!r}")
        cap = STABILITY_CAP[self.family]
        if self.p_max > cap:
            raise CappedOrderError(self.family.name, self.p_max, cap)


def normalization(p: int) -> float:
    return (p + 1) / np.pi


def is_valid_pair(family, p: int, q: int) -> bool:
    family = Family.parse(family)
    if p < 0 or abs(q) > p:
        return False
    if family is Family.ZM:
        return (p - abs(q)) % 2 == 0
    return True


def enumerate_pairs(spec: MomentSpec) -> list[tuple[int, int]]:
    """Pairs ordered by ascending ``p`` then ascending ``q``."""
    q_min = 0 if spec.include_q_zero else 1
    return [
        (p, q)
        for p in range(spec.p_max + 1)
        for q in range(q_min, p + 1)
        if is_valid_pair(spec.family, p, q)
    ]


def jacobi_table(n_max: int, alpha: float, x, beta: float = 0.0) -> np.ndarray:
    """``P_n^{(alpha, beta)}(x)`` for ``n = 0..n_max``, stacked on axis 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((max(n_max, 0) + 1,) + x.shape)
    out[0] = 1.0
    if n_max <= 0:
        return out
    a, b = float(alpha), float(beta)
    out[1] = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0
    for n in range(2, n_max + 1):
        c = 2 * n + a + b
        c1 = 2.0 * n * (n + a + b) * (c - 2.0)
        c2 = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b)
        c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * c
        out[n] = (c2 * out[n - 1] - c3 * out[n - 2]) / c1
    return out


def radial_table(family, q: int, p_max: int, r) -> dict[int, np.ndarray]:
    """All valid ``R_{p,q}(r)`` with ``p <= p_max`` at fixed ``q``.

    One recurrence sweep yields every order, so each additional order costs
    O(1) per radius on top of the shared ``r**q`` power.
    """
    family = Family.parse(family)
    q = abs(q)
    r = np.asarray(r, dtype=np.float64)
    if p_max < q:
        return {}
    if family is Family.ZM:
        n_max = (p_max - q) // 2
        P = jacobi_table(n_max, q, 1.0 - 2.0 * r * r)
        rq = r**q
        return {q + 2 * n: (-1.0) ** n * rq * P[n] for n in range(n_max + 1)}
    if family is Family.PZM:
        n_max = p_max - q
        P = jacobi_table(n_max, 2 * q + 1, 1.0 - 2.0 * r)
        rq = r**q
        return {q + n: (-1.0) ** n * rq * P[n] for n in range(n_max + 1)}
    P = jacobi_table(p_max, 1, 1.0 - 2.0 * r)
    return {p: (-1.0) ** p * P[p] for p in range(q, p_max + 1)}


def radial_eval(family, p: int, q: int, r):
    """Evaluate ``R_{p,q}(r)``; ``r`` may be a scalar or an array in [0, 1]."""
    family = Family.parse(family)
    if not is_valid_pair(family, p, q):
        raise DomainError(f"(p={p}, q={q}) is not a valid {family.name} pair")
    arr = np.asarray(r, dtype=np.float64)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("radius must lie in [0, 1]")
    val = radial_table(family, q, p, arr)[p]
    return float(val) if np.ndim(r) == 0 else val


@dataclass(frozen=True, eq=False)
class MomentBasis:
    """Kernel rows ``lambda_p R_pq(r) exp(-i q theta)`` over masked pixels.

    ``kernels`` has shape ``(n_pairs, n_masked)``, pair-major and C-contiguous;
    pixels follow row-major order of ``grid.mask``. The elemental area is
    *not* folded in. ``real_stack`` holds the same numbers as a contiguous
    ``(n_masked, 2 * n_pairs)`` real matrix (real parts, then imaginary parts)
    so that a batch of moment sums is a single real matrix product.
    """

    spec: MomentSpec
    grid: UnitDiskGrid
    pairs: list = field(repr=False)
    kernels: np.ndarray = field(repr=False)
    real_stack: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.real_stack is None:
            stack = np.ascontiguousarray(np.concatenate([self.kernels.real, self.kernels.imag]).T)
            stack.setflags(write=False)
            object.__setattr__(self, "real_stack", stack)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([normalization(p) for p, _ in self.pairs])


def kernel_rows(spec: MomentSpec, r, theta, pairs) -> np.ndarray:
    """Evaluate kernel values for ``pairs`` at polar samples ``(r, theta)``."""
    out = np.empty((len(pairs), np.size(r)), dtype=np.complex128)
    by_q = {}
    for i, (p, q) in enumerate(pairs):
        by_q.setdefault(q, []).append((i, p))
    for q, rows in by_q.items():
        table = radial_table(spec.family, q, max(p for _, p in rows), r)
        phase = np.exp(-1j * q * theta)
        for i, p in rows:
            out[i] = normalization(p) * table[p] * phase
    return out


def build_basis(spec: MomentSpec, grid: UnitDiskGrid) -> MomentBasis:
    if not isinstance(spec, MomentSpec):
        raise TypeError("spec must be a MomentSpec")
    pairs = enumerate_pairs(spec)
    r, theta = grid.masked_polar()
    kernels = kernel_rows(spec, r, theta, pairs)
    kernels.setflags(write=False)
    return MomentBasis(spec, grid, pairs, kernels)


def orthogonality_check(basis: MomentBasis) -> np.ndarray:
    """Absolute deviation of the discrete Gram matrix from the identity.

    Entry ``(i, j)`` is ``|G_ij - delta_ij|`` with
    ``G_ij = delta^2 * sum(K_i * conj(K_j)) / sqrt(lambda_i * lambda_j)``,
    whose continuous limit is exactly the identity.
    """
    K = basis.kernels
    lam = basis.lambdas
    G = (K @ K.conj().T) * basis.grid.delta**2 / np.sqrt(np.outer(lam, lam))
    return np.abs(G - np.eye(len(lam)))


def _radial_with_derivative(family, q, p_max, r):
    """``{p: (R, dR/dr, R/r)}`` at fixed ``q``; ``R/r`` is 0 where undefined."""
    family = Family.parse(family)
    q = abs(q)
    out = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        if family is Family.OFMM:
            u = 1.0 - 2.0 * r
            P = jacobi_table(p_max, 1, u)
            dP = jacobi_table(p_max - 1, 2, u, beta=1)
            for p in range(q, p_max + 1):
                sign = (-1.0) ** p
                R = sign * P[p]
                dR = sign * -2.0 * (p + 2) / 2.0 * dP[p - 1] if p > 0 else np.zeros_like(r)
                Rr = np.where(r > 0, R / np.where(r > 0, r, 1.0), 0.0)
                out[p] = (R, dR, Rr)
            return out
        if family is Family.ZM:
            a, u, du, n_max, step = q, 1.0 - 2.0 * r * r, -4.0 * r, (p_max - q) // 2, 2
        else:
            a, u, du, n_max, step = 2 * q + 1, 1.0 - 2.0 * r, -2.0, p_max - q, 1
        P = jacobi_table(n_max, a, u)
        dP = jacobi_table(n_max - 1, a + 1, u, beta=1)
        rq = r**q
        rq1 = r ** (q - 1) if q > 0 else np.zeros_like(r)
        for n in range(n_max + 1):
            sign = (-1.0) ** n
            deriv = (n + a + 1) / 2.0 * dP[n - 1] if n > 0 else 0.0
            R = sign * rq * P[n]
            dR = sign * (q * rq1 * P[n] + rq * deriv * du)
            Rr = sign * rq1 * P[n]
            out[q + step * n] = (R, dR, Rr)
    return out


def kernel_gradients(spec: MomentSpec, r, theta, pairs):
    """Cartesian derivatives ``(dK/dx, dK/dy)`` of the kernel rows.

    Used to differentiate central moments with respect to the disk origin.
    """
    r = np.asarray(r, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    dx = np.empty((len(pairs), r.size), dtype=np.complex128)
    dy = np.empty_like(dx)
    cos, sin = np.cos(theta), np.sin(theta)
    by_q = {}
    for i, (p, q) in enumerate(pairs):
        by_q.setdefault(q, []).append((i, p))
    for q, rows in by_q.items():
        table = _radial_with_derivative(spec.family, q, max(p for _, p in rows), r)
        phase = np.exp(-1j * q * theta)
        for i, p in rows:
            R, dR, Rr = table[p]
            lam = normalization(p)
            dx[i] = lam * phase * (dR * cos + 1j * q * Rr * sin)
            dy[i] = lam * phase * (dR * sin - 1j * q * Rr * cos)
    return dx, dy
