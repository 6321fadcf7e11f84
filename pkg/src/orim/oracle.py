"""Slow, literal reference implementations used to check the fast paths.

Nothing in here imports the modules it checks: the radial polynomials come
from big-integer factorial sums, the integral from a plain midpoint rule,
and group convolution from nested loops over explicit coordinate matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np


def rational_radial(family: str, p: int, q: int) -> list[Fraction]:
    """Exact coefficients ``c[j]`` of ``sum_j c[j] r**j``, lowest power first."""
    family = str(getattr(family, "value", family)).lower()
    if p > 15:
        raise ValueError("rational_radial is limited to p <= 15")
    q = abs(q)
    coef = [Fraction(0)] * (p + 1)
    if family == "zm":
        if q > p or (p - q) % 2:
            raise ValueError(f"invalid ZM pair ({p}, {q})")
        for k in range((p - q) // 2 + 1):
            num = (-1) ** k * factorial(p - k)
            den = factorial(k) * factorial((p + q) // 2 - k) * factorial((p - q) // 2 - k)
            coef[p - 2 * k] += Fraction(num, den)
    elif family == "pzm":
        if q > p:
            raise ValueError(f"invalid PZM pair ({p}, {q})")
        for k in range(p - q + 1):
            num = (-1) ** k * factorial(2 * p + 1 - k)
            den = factorial(k) * factorial(p - q - k) * factorial(p + q + 1 - k)
            coef[p - k] += Fraction(num, den)
    elif family == "ofmm":
        if q > p:
            raise ValueError(f"invalid OFMM pair ({p}, {q})")
        for k in range(p + 1):
            num = (-1) ** (p + k) * factorial(p + k + 1)
            den = factorial(k) * factorial(k + 1) * factorial(p - k)
            coef[k] += Fraction(num, den)
    else:
        raise ValueError(f"unknown family {family!r}")
    return coef


def rational_eval(coef, r) -> Fraction:
    """Evaluate exact coefficients at the exact rational value of float ``r``."""
    x = Fraction(r)
    acc = Fraction(0)
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def enumerate_pairs_brute(family: str, p_max: int, include_q_zero=False):
    family = str(getattr(family, "value", family)).lower()
    out = []
    for p in range(p_max + 1):
        for q in range(-p, p + 1):
            if q < (0 if include_q_zero else 1):
                continue
            if family == "zm" and (p - q) % 2 != 0:
                continue
            out.append((p, q))
    return out


@dataclass
class QuadratureResult:
    value: complex
    coarse: complex
    error_estimate: float


def quadrature_moment(func, family, p, q, n_r=1024, n_theta=1024) -> QuadratureResult:
    """Midpoint rule for ``lambda_p * int int O(r,t) R(r) exp(-iqt) r dr dt``.

    ``func(x, y)`` is the analytic image on the unit disk. The midpoint rule
    in ``r`` has an ``h**2`` error expansion, so the value returned is the
    Richardson combination of ``n_r`` and ``2 * n_r`` radial cells; the raw
    coarse estimate and their difference are reported alongside.
    """
    if n_r < 256 or n_theta < 1024:
        raise ValueError("quadrature_moment needs at least 256 x 1024 cells")
    coef = [float(c) for c in rational_radial(family, p, q)]
    lam = (p + 1) / np.pi

    def midpoint(nr):
        r = (np.arange(nr) + 0.5) / nr
        t = (np.arange(n_theta) + 0.5) * (2 * np.pi / n_theta)
        R = np.polynomial.polynomial.polyval(r, coef)
        rr, tt = np.meshgrid(r, t, indexing="ij")
        vals = func(rr * np.cos(tt), rr * np.sin(tt))
        ang = (vals * np.exp(-1j * q * tt)).sum(axis=1) * (2 * np.pi / n_theta)
        return lam * np.sum(ang * R * r) / nr

    coarse = midpoint(n_r)
    fine = midpoint(2 * n_r)
    value = (4.0 * fine - coarse) / 3.0
    return QuadratureResult(complex(value), complex(coarse), float(abs(fine - coarse) / 3.0))


# Dihedral elements as integer matrices acting on centred (row, col) offsets:
# ROT is a quarter turn and MIR negates the column offset; element index
# m * 4 + r denotes ROT^r @ MIR^m.
_ROT = np.array([[0, -1], [1, 0]])
_MIR = np.array([[1, 0], [0, -1]])


def group_matrices(order: int) -> list[np.ndarray]:
    if order not in (1, 4, 8):
        raise ValueError("group order must be 1, 4 or 8")
    mats = []
    for m in range(order // 4 if order > 1 else 1):
        for r in range(order if order < 4 else 4):
            mats.append(np.linalg.matrix_power(_ROT, r) @ np.linalg.matrix_power(_MIR, m))
    return mats


def _find(mats, A):
    for i, B in enumerate(mats):
        if np.array_equal(A, B):
            return i
    raise AssertionError("matrix not in group")


def brute_group_conv(inputs, filters, order: int):
    """Literal group correlation with zero padding and 'same' output size.

    ``inputs`` is ``(H, W, T_in, C_in)`` with ``T_in`` either 1 (a planar
    image, lifting layer) or ``order``; ``filters`` is ``(k, k, T_in, C_in,
    C_out)``. Returns ``(H, W, order, C_out)`` where::

        out[x, g, o] = sum_{z, h, c} in[z, h, c] * psi[g^-1 (z - x), g^-1 h, c, o]

    For ``T_in == 1`` the ``h`` sum is dropped (planar input).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    H, W, T_in, C_in = inputs.shape
    k = filters.shape[0]
    if H > 8 or W > 8 or C_in > 3 or filters.shape[-1] > 3:
        raise ValueError("brute_group_conv refuses inputs above 8x8x3")
    mats = group_matrices(order)
    inv = [np.round(np.linalg.inv(A)).astype(int) for A in mats]
    half = k // 2
    C_out = filters.shape[-1]
    out = np.zeros((H, W, order, C_out))
    for g in range(order):
        gi = inv[g]
        for xr in range(H):
            for xc in range(W):
                for zr in range(H):
                    for zc in range(W):
                        u = gi @ np.array([zr - xr, zc - xc])
                        if abs(u[0]) > half or abs(u[1]) > half:
                            continue
                        for h in range(T_in):
                            hs = 0 if T_in == 1 else _find(mats, gi @ mats[h])
                            for c in range(C_in):
                                for o in range(C_out):
                                    out[xr, xc, g, o] += (
                                        inputs[zr, zc, h, c]
                                        * filters[u[0] + half, u[1] + half, hs, c, o]
                                    )
    return out
