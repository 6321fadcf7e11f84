"""Finite rotation/reflection groups acting on square grids.

Element ``m * 4 + r`` of p4m is "mirror ``m`` times, then rotate ``r``
quarter turns"; p4 keeps ``m = 0`` and Z2 is the trivial group. On arrays a
quarter turn is ``np.rot90(a, 1, axes)`` and the mirror reverses the second
spatial axis. These two operators satisfy the dihedral relation, so the map
from elements to array operators is a homomorphism.
"""

from __future__ import annotations

import enum
from functools import cached_property

import numpy as np

from orim.errors import DomainError


class GroupKind(enum.Enum):
    Z2 = "z2"
    P4 = "p4"
    P4M = "p4m"


class Group:
    def __init__(self, kind):
        if isinstance(kind, Group):
            kind = kind.kind
        self.kind = GroupKind(str(getattr(kind, "value", kind)).lower())
        self.order = {GroupKind.Z2: 1, GroupKind.P4: 4, GroupKind.P4M: 8}[self.kind]

    def __repr__(self):
        return f"Group({self.kind.value})"

    def __eq__(self, other):
        return isinstance(other, Group) and other.kind is self.kind

    def __hash__(self):
        return hash(self.kind)

    def element(self, i) -> tuple[int, int]:
        """``(mirror, rotation)`` of element index ``i``."""
        if self.order == 1:
            return 0, 0
        return divmod(i, 4)

    def index(self, m, r) -> int:
        if self.order == 1:
            return 0
        if self.order == 4 and m:
            raise DomainError("p4 has no reflections")
        return m * 4 + r % 4

    @cached_property
    def table(self) -> np.ndarray:
        """``table[a, b]`` is the index of the product ``a * b``."""
        n = self.order
        out = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            m1, r1 = self.element(a)
            for b in range(n):
                m2, r2 = self.element(b)
                out[a, b] = self.index(m1 ^ m2, r1 + (-1) ** m1 * r2)
        return out

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.array([int(np.flatnonzero(row == 0)[0]) for row in self.table])

    def transform_spatial(self, a, g, axes=(-2, -1)):
        """Apply element ``g`` to the two spatial ``axes`` of ``a``."""
        m, r = self.element(g)
        if m:
            a = np.flip(a, axis=axes[1])
        if r:
            a = np.rot90(a, r, axes=axes)
        return a

    def act(self, x, g):
        """Left action on group feature maps shaped ``(N, H, W, T, F)``.

        ``(L_g x)[h] = T_g(x[g^-1 h])``; planar maps (``T == 1``) are only
        transformed spatially.
        """
        x = np.asarray(x)
        if x.shape[3] > 1:
            if x.shape[3] != self.order:
                raise DomainError("feature map theta axis does not match group order")
            src = self.table[self.inverse[g]]
            x = x[:, :, :, src, :]
        return np.ascontiguousarray(self.transform_spatial(x, g, axes=(1, 2)))

    def act_planar(self, img, g):
        """Act on a single planar image ``(H, W)`` or ``(N, H, W)``."""
        return np.ascontiguousarray(self.transform_spatial(np.asarray(img), g, axes=(-2, -1)))
