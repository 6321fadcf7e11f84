"""Binary basis tables and JSON feature files.

Basis file layout (all little-endian)::

    8s   magic "ORIMBAS1"
    u8   family code (0 = ZM, 1 = PZM, 2 = OFMM)
    u16  p_max
    u32  M
    u8   disk mode (0 = inner, 1 = outer)
    u32  pair count P
    P x (u16 p, i16 q)
    P x n_masked x (f64 re, f64 im)   kernel rows, masked pixels row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from orim.basis import Family, MomentBasis, MomentSpec, build_basis
from orim.errors import IDXFormatError
from orim.unit_disk import DiskMode, build_grid

BASIS_MAGIC = b"ORIMBAS1"
_HEADER = struct.Struct("<8sBHIBI")
_DISK_CODES = {DiskMode.INNER: 0, DiskMode.OUTER: 1}


def write_basis(path, basis: MomentBasis):
    spec, grid = basis.spec, basis.grid
    parts = [_HEADER.pack(BASIS_MAGIC, spec.family.code, spec.p_max, grid.size,
                          _DISK_CODES[grid.disk_mode], len(basis.pairs))]
    pairs = np.zeros(len(basis.pairs), dtype=[("p", "<u2"), ("q", "<i2")])
    if basis.pairs:
        pairs["p"], pairs["q"] = zip(*basis.pairs)
    parts.append(pairs.tobytes())
    parts.append(np.ascontiguousarray(basis.kernels).astype("<c16").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_basis(path):
    """Return ``(header dict, pairs, kernels)`` from a basis file."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise IDXFormatError(f"{path}: file too short for a basis header")
    magic, fam, p_max, M, disk, count = _HEADER.unpack_from(raw)
    if magic != BASIS_MAGIC:
        raise IDXFormatError(f"{path}: bad magic {magic!r}")
    off = _HEADER.size
    pairs = np.frombuffer(raw, dtype=[("p", "<u2"), ("q", "<i2")], count=count, offset=off)
    off += pairs.nbytes
    kernels = np.frombuffer(raw, dtype="<c16", offset=off)
    n_masked = kernels.size // count if count else 0
    header = {
        "family": [f for f in Family if f.code == fam][0],
        "p_max": p_max,
        "size": M,
        "disk_mode": DiskMode.INNER if disk == 0 else DiskMode.OUTER,
        "pair_count": count,
    }
    return header, [(int(p), int(q)) for p, q in pairs], kernels.reshape(count, n_masked)


def export_basis(path, family, p_max, size, disk_mode=DiskMode.INNER) -> MomentBasis:
    basis = build_basis(MomentSpec(family, p_max), build_grid(size, disk_mode))
    write_basis(path, basis)
    return basis


def features_json(mv, magnitudes) -> dict:
    return {
        "schema": "orim/1",
        "family": mv.spec.family.value,
        "p_max": mv.spec.p_max,
        "pairs": [list(p) for p in mv.pairs],
        "magnitudes": [float(v) for v in magnitudes],
        "complex": [[float(z.real), float(z.imag)] for z in mv.values],
    }


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2))
