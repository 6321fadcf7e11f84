"""Layers with explicit forward and backward passes.

Activations are ``(N, H, W, T, F)`` arrays: batch, two spatial axes, the
group (orientation) axis and channels. Planar images enter as ``T == 1``.
Every layer caches what its backward pass needs during ``forward``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from orim.basis import Family, MomentSpec, build_basis, enumerate_pairs, kernel_gradients
from orim.errors import DimensionError, GroupMismatchError, MissingCacheError
from orim.gcnn.group import Group
from orim.moments import moments_from_masked
from orim.unit_disk import DiskMode, build_centered_grid, build_grid, compute_centroid

SUBGRADIENT_EPS = 1e-12


class Layer:
    params: tuple = ()

    def __init__(self):
        self.grads = {}
        self._cache = None

    def parameters(self):
        return [(name, getattr(self, name)) for name in self.params]

    def _cached(self):
        if self._cache is None:
            raise MissingCacheError(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def __call__(self, x):
        return self.forward(x)


def glorot_uniform(rng, shape, fan_in, fan_out, dtype=np.float64):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def conv_forward(x, w):
    """'Same' zero-padded correlation.

    ``x`` is ``(N, H, W, K_in)``, ``w`` is ``(k, k, K_in, K_out)``. Returns
    the output and the im2col matrix for reuse in backward.
    """
    k = w.shape[0]
    pad = k // 2
    N, H, W, K = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))  # N, H, W, K, k, k
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(N * H * W, k * k * K)
    out = cols @ w.reshape(k * k * K, -1)
    return out.reshape(N, H, W, -1), cols


def conv_backward(dout, cols, w, x_shape):
    k = w.shape[0]
    pad = k // 2
    N, H, W, K = x_shape
    d2 = dout.reshape(N * H * W, -1)
    dw = (cols.T @ d2).reshape(w.shape)
    dcols = (d2 @ w.reshape(k * k * K, -1).T).reshape(N, H, W, k, k, K)
    dxp = np.zeros((N, H + 2 * pad, W + 2 * pad, K), dtype=dout.dtype)
    for a in range(k):
        for b in range(k):
            dxp[:, a:a + H, b:b + W, :] += dcols[:, :, :, a, b, :]
    return dxp[:, pad:pad + H, pad:pad + W, :], dw


class GroupConv(Layer):
    """Lifting (``in_order == 1``) or group-to-group convolution.

    The learnable filter ``weight`` has shape ``(k, k, T_in, C_in, C_out)``.
    Output orientation ``g`` correlates the input with the transformed filter
    ``(L_g psi)[h] = T_g(psi[g^-1 h])``; the whole transformed bank is
    gathered with one precomputed index array.
    """

    params = ("weight",)

    def __init__(self, group, in_channels, out_channels, kernel_size=3,
                 lifting=False, rng=None, dtype=np.float64):
        super().__init__()
        if kernel_size % 2 != 1:
            raise DimensionError("filters must be odd-sized")
        self.group = Group(group)
        self.in_order = 1 if lifting else self.group.order
        self.out_order = self.group.order
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.k = kernel_size
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * self.in_order * kernel_size**2
        fan_out = out_channels * self.out_order * kernel_size**2
        self.weight = glorot_uniform(
            rng, (kernel_size, kernel_size, self.in_order, in_channels, out_channels),
            fan_in, fan_out, dtype)
        self._index = self._gather_index()

    def _gather_index(self):
        k, Ti, To = self.k, self.in_order, self.out_order
        base = np.arange(k * k).reshape(k, k)
        idx = np.empty((k, k, Ti, To), dtype=np.int64)
        for g in range(To):
            spatial = self.group.transform_spatial(base, g, axes=(0, 1))
            g_inv = self.group.inverse[g]
            for h in range(Ti):
                src_h = 0 if Ti == 1 else self.group.table[g_inv, h]
                idx[:, :, h, g] = spatial * Ti + src_h
        return idx

    def expanded_filter(self):
        k, Ti, To = self.k, self.in_order, self.out_order
        Ci, Co = self.in_channels, self.out_channels
        flat = self.weight.reshape(k * k * Ti, Ci, Co)
        bank = flat[self._index]  # k, k, Ti, To, Ci, Co
        return bank.transpose(0, 1, 2, 4, 3, 5).reshape(k, k, Ti * Ci, To * Co)

    def forward(self, x):
        N, H, W, T, C = x.shape
        if T != self.in_order:
            raise GroupMismatchError(
                f"input has {T} orientations, layer expects {self.in_order}")
        if C != self.in_channels:
            raise DimensionError(f"input has {C} channels, layer expects {self.in_channels}")
        w = self.expanded_filter()
        out, cols = conv_forward(x.reshape(N, H, W, T * C), w)
        self._cache = (cols, w, (N, H, W, T * C))
        return out.reshape(N, H, W, self.out_order, self.out_channels)

    def backward(self, dout):
        cols, w, x_shape = self._cached()
        N, H, W, _ = x_shape
        dx, dw = conv_backward(dout.reshape(N, H, W, -1), cols, w, x_shape)
        k, Ti, To = self.k, self.in_order, self.out_order
        Ci, Co = self.in_channels, self.out_channels
        dw = dw.reshape(k, k, Ti, Ci, To, Co).transpose(0, 1, 2, 4, 3, 5)
        flat = np.zeros((k * k * Ti, Ci, Co), dtype=dw.dtype)
        np.add.at(flat, self._index.ravel(), dw.reshape(-1, Ci, Co))
        self.grads["weight"] = flat.reshape(self.weight.shape)
        return dx.reshape(N, H, W, Ti, Ci)


def lift_conv(x, filters, group):
    """Functional lifting convolution of planar ``(N, H, W, 1, C)`` input.

    ``filters`` is ``(k, k, C_in, C_out)``.
    """
    filters = np.asarray(filters, dtype=np.float64)
    layer = GroupConv(group, filters.shape[2], filters.shape[3], filters.shape[0], lifting=True)
    layer.weight = filters[:, :, None, :, :].copy()
    return layer.forward(np.asarray(x, dtype=np.float64))


def group_conv(x, filters, group):
    """Functional group convolution; ``filters`` is ``(k, k, T, C_in, C_out)``."""
    filters = np.asarray(filters, dtype=np.float64)
    group = Group(group)
    if filters.shape[2] != group.order:
        raise GroupMismatchError("filter theta extent does not match the group")
    layer = GroupConv(group, filters.shape[3], filters.shape[4], filters.shape[0])
    layer.weight = filters.copy()
    return layer.forward(np.asarray(x, dtype=np.float64))


class ChannelAffine(Layer):
    """Per-channel ``scale * x + bias`` shared over space and orientation."""

    params = ("scale", "bias")

    def __init__(self, channels, dtype=np.float64):
        super().__init__()
        self.scale = np.ones(channels, dtype=dtype)
        self.bias = np.zeros(channels, dtype=dtype)

    def forward(self, x):
        self._cache = x
        return x * self.scale + self.bias

    def backward(self, dout):
        x = self._cached()
        axes = tuple(range(dout.ndim - 1))
        self.grads["scale"] = (dout * x).sum(axis=axes)
        self.grads["bias"] = dout.sum(axis=axes)
        return dout * self.scale


class ReLU(Layer):
    def forward(self, x):
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, dout):
        return np.where(self._cached(), dout, 0).astype(dout.dtype, copy=False)


class SpatialMaxPool(Layer):
    """2x2, stride 2 max-pool applied to every orientation slice alike."""

    def forward(self, x):
        N, H, W, T, F = x.shape
        if H % 2 or W % 2:
            raise DimensionError("max-pool needs even spatial dimensions")
        blocks = x.reshape(N, H // 2, 2, W // 2, 2, T, F).transpose(0, 1, 3, 5, 6, 2, 4)
        blocks = blocks.reshape(N, H // 2, W // 2, T, F, 4)
        arg = blocks.argmax(axis=-1)
        self._cache = (arg, x.shape)
        return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        arg, shape = self._cached()
        N, H, W, T, F = shape
        onehot = (arg[..., None] == np.arange(4)) * dout[..., None]
        dx = onehot.reshape(N, H // 2, W // 2, T, F, 2, 2).transpose(0, 1, 5, 2, 6, 3, 4)
        return np.ascontiguousarray(dx).reshape(shape).astype(dout.dtype, copy=False)


class ThetaMaxProject(Layer):
    """Max over the orientation axis; ties go to the lowest index."""

    def forward(self, x):
        arg = x.argmax(axis=3)
        self._cache = (arg, x.shape)
        return np.take_along_axis(x, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]

    def backward(self, dout):
        arg, shape = self._cached()
        dx = np.zeros(shape, dtype=dout.dtype)
        np.put_along_axis(dx, arg[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
        return dx


def theta_max_project(x):
    """``(N, H, W, T, F) -> (N, H, W, F)``."""
    return ThetaMaxProject().forward(np.asarray(x))


class Flatten(Layer):
    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._cached())


class OrimTransition(Layer):
    """Orientation max-projection followed by per-channel moment magnitudes.

    Output is ``(N, F * n_pairs)``, channel-major. With ``central=True`` the
    unit disk is re-centred on each map's centroid and the backward pass
    includes the dependence of the centroid on the pixel values.
    """

    def __init__(self, spec: MomentSpec, size: int, central=False, disk_mode=DiskMode.INNER):
        super().__init__()
        self.spec = spec
        self.size = size
        self.central = central
        self.disk_mode = DiskMode.parse(disk_mode)
        self.pairs = enumerate_pairs(spec)
        self.project = ThetaMaxProject()
        self.basis = build_basis(spec, build_grid(size, self.disk_mode))

    @property
    def n_pairs(self):
        return len(self.pairs)

    def _moments_fixed(self, maps):
        # maps: (N, F, M, M)
        return moments_from_masked(maps[:, :, self.basis.grid.mask], self.basis)

    def forward(self, x):
        if x.ndim != 5 or x.shape[1] != x.shape[2]:
            raise DimensionError(f"expected square (N, H, W, T, F) maps, got {x.shape}")
        if x.shape[1] != self.size:
            raise DimensionError(f"transition built for {self.size}x{self.size} maps")
        proj = self.project.forward(x)
        maps = np.moveaxis(proj, 3, 1).astype(np.float64)  # N, F, M, M
        if self.central:
            om, extra = self._moments_central(maps)
        else:
            om, extra = self._moments_fixed(maps), None
        self._cache = (maps, om, extra, x.dtype)
        N, F = maps.shape[:2]
        return np.abs(om).reshape(N, F * self.n_pairs).astype(x.dtype, copy=False)

    def _moments_central(self, maps):
        N, F, M, _ = maps.shape
        om = np.zeros((N, F, self.n_pairs), dtype=np.complex128)
        grids = []
        for n in range(N):
            for f in range(F):
                img = maps[n, f]
                cen = compute_centroid(img)
                grid = build_centered_grid(M, self.disk_mode, cen)
                basis = build_basis(self.spec, grid)
                vals = img[grid.mask]
                om[n, f] = grid.delta**2 * (basis.kernels @ vals)
                grids.append((grid, basis, cen))
        return om, grids

    def backward(self, dout):
        maps, om, extra, dtype = self._cached()
        N, F, M, _ = maps.shape
        g = dout.reshape(N, F, self.n_pairs).astype(np.float64)
        mag = np.abs(om)
        safe = np.where(mag < SUBGRADIENT_EPS, 1.0, mag)
        # d|z| = Re(conj(z)/|z| dz); subgradient 0 at |z| = 0
        coef = np.where(mag < SUBGRADIENT_EPS, 0.0, g * np.conj(om) / safe)
        dmaps = np.zeros_like(maps)
        if not self.central:
            grid = self.basis.grid
            dmaps[:, :, grid.mask] = (coef @ self.basis.kernels).real * grid.delta**2
        else:
            self._central_backward(maps, coef, extra, dmaps)
        dproj = np.moveaxis(dmaps, 1, 3).astype(dtype, copy=False)
        return self.project.backward(dproj)

    def _central_backward(self, maps, coef, grids, dmaps):
        N, F, M, _ = maps.shape
        s = np.arange(M, dtype=np.float64)
        i = 0
        for n in range(N):
            for f in range(F):
                grid, basis, cen = grids[i]
                i += 1
                img = maps[n, f]
                total = img.sum()
                c = coef[n, f]
                area = grid.delta**2
                direct = np.zeros((M, M))
                direct[grid.mask] = (c @ basis.kernels).real * area
                dmaps[n, f] = direct
                if not total > 0.0:
                    continue
                r, theta = grid.masked_polar()
                dkx, dky = kernel_gradients(self.spec, r, theta, basis.pairs)
                vals = img[grid.mask]
                # moment sensitivity to moving the disk origin by one disk unit
                ax = area * (dkx @ vals)
                ay = area * (dky @ vals)
                # coordinates are (2s - 2c)/D, so d(coord)/dc = -2/D = -delta
                gx = -(c @ ax).real * grid.delta
                gy = -(c @ ay).real * grid.delta
                dmaps[n, f] += (gx * (s[:, None] - cen.cx) + gy * (s[None, :] - cen.cy)) / total


def orim_transition(x, spec: MomentSpec, central=False):
    """Functional form: invariant features of ``(N, H, W, T, F)`` maps."""
    x = np.asarray(x, dtype=np.float64)
    return OrimTransition(spec, x.shape[1], central).forward(x)


class Dense(Layer):
    params = ("weight", "bias")

    def __init__(self, n_in, n_out, rng=None, dtype=np.float64):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = glorot_uniform(rng, (n_in, n_out), n_in, n_out, dtype)
        self.bias = np.zeros(n_out, dtype=dtype)

    def forward(self, x):
        self._cache = x
        return x @ self.weight + self.bias

    def backward(self, dout):
        x = self._cached()
        self.grads["weight"] = x.T @ dout
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.weight.T


class SoftmaxCrossEntropy:
    """Mean cross-entropy over the batch."""

    def __init__(self):
        self._cache = None

    def forward(self, logits, labels):
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        self._cache = (np.exp(logp), labels)
        return float(-logp[np.arange(len(labels)), labels].mean())

    def backward(self):
        if self._cache is None:
            raise MissingCacheError("SoftmaxCrossEntropy.backward called before forward")
        prob, labels = self._cache
        d = prob.copy()
        d[np.arange(len(labels)), labels] -= 1.0
        return d / len(labels)


__all__ = [
    "Layer", "GroupConv", "ChannelAffine", "ReLU", "SpatialMaxPool", "ThetaMaxProject",
    "Flatten", "OrimTransition", "Dense", "SoftmaxCrossEntropy", "lift_conv", "group_conv",
    "theta_max_project", "orim_transition", "conv_forward", "conv_backward", "Family",
]
