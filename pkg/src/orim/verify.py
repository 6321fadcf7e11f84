"""Invariance verification suites over a synthetic image corpus."""

from __future__ import annotations

import numpy as np

from orim.basis import MomentSpec, build_basis, radial_eval
from orim.data import synth_function, synth_image
from orim.moments import compute_moments
from orim.transforms import (
    TransformSpec,
    apply,
    check_reflection_relation,
    check_rotation_relation,
    check_translation_invariance,
)
from orim.unit_disk import build_grid

GRID_EXACT_TOL = 1e-9
TRANSLATION_TOL = 1e-3
SUITES = ("rotation", "reflection", "translation", "all")


def corpus(M: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Images used by the grid-exact suites; none has a symmetry that would
    make a relation hold trivially."""
    rng = np.random.default_rng(seed)
    c = (M - 1) / 2.0
    return {
        "blob_offcentre": synth_image("blob", M, cx=c + M / 8, cy=c - M / 10, sigma=M / 12),
        "radial_r2": synth_image("radial", M, n=2),
        "checker": synth_image("checker", M, period=max(M // 8, 2)),
        "noise": rng.random((M, M)),
        "blob_plus_noise": synth_image("blob", M, cx=c - M / 7, cy=c + M / 9, sigma=M / 10)
        + 0.1 * rng.random((M, M)),
    }


def _entry(test, image, value, tol):
    return {"test": test, "image": image, "max_relative": float(value),
            "tolerance": tol, "pass": bool(value <= tol)}


def rotation_suite(spec, M, images):
    basis = build_basis(spec, build_grid(M))
    out = []
    for name, img in images.items():
        for k in (1, 2, 3):
            res = check_rotation_relation(img, k * np.pi / 2, basis)
            out.append(_entry(f"rotation_phase_{90 * k}", name, res.max_relative, GRID_EXACT_TOL))
            out.append(_entry(f"rotation_magnitude_{90 * k}", name,
                              res.max_relative_magnitude, GRID_EXACT_TOL))
    return out


def reflection_suite(spec, M, images):
    basis = build_basis(spec, build_grid(M))
    out = []
    for name, img in images.items():
        res = check_reflection_relation(img, basis)
        scale = np.max(np.abs(res.reference)) or 1.0
        out.append(_entry("reflection_horizontal", name, np.max(np.abs(res.horizontal)) / scale,
                          GRID_EXACT_TOL))
        out.append(_entry("reflection_vertical", name, np.max(np.abs(res.vertical)) / scale,
                          GRID_EXACT_TOL))
        om = compute_moments(img, basis).values
        for k in (0, 1, 2, 3):
            for flip in (TransformSpec.flip_h(), TransformSpec.flip_v()):
                moved = apply(apply(img, flip), TransformSpec.rotate90(k))
                dev = np.max(np.abs(np.abs(compute_moments(moved, basis).values) - np.abs(om)))
                out.append(_entry(f"p4m_magnitude_{flip.kind.value}_rot{90 * k}", name,
                                  dev / scale, GRID_EXACT_TOL))
    return out


def two_blob_image(M):
    """A main blob with a weaker satellite; unlike a single Gaussian it is not
    radially symmetric about its centroid, so q >= 1 central moments are nonzero."""
    c = (M - 1) / 2.0
    return (synth_image("blob", M, cx=c, cy=c, sigma=M / 16)
            + 0.5 * synth_image("blob", M, cx=c + M / 12, cy=c - M / 20, sigma=M / 24))


def translation_suite(spec, M, shifts=None):
    img = two_blob_image(M)
    shifts = shifts or [(0, 0), (3, -2), (-4, 1), (2, 5)]
    out = []
    for res in check_translation_invariance(img, shifts, spec):
        entry = _entry(f"translation_{res.shift[0]}_{res.shift[1]}", "two_blob",
                       res.deviation if res.supported else float("inf"), TRANSLATION_TOL)
        entry["supported"] = res.supported
        out.append(entry)
    return out


def oracle_checks(spec, M):
    """Cross-checks against the independent references in :mod:`orim.oracle`."""
    from orim.oracle import quadrature_moment, rational_eval, rational_radial

    out = []
    worst = 0.0
    radii = np.linspace(0.0, 1.0, 101)
    for p in range(min(spec.p_max, 10) + 1):
        for q in range(0, p + 1):
            try:
                coef = rational_radial(spec.family.value, p, q)
            except ValueError:
                continue
            for r in radii:
                exact = float(rational_eval(coef, r))
                got = radial_eval(spec.family, p, q, r)
                worst = max(worst, abs(got - exact) / max(abs(exact), 1.0))
    out.append(_entry("radial_vs_rational", "-", worst, 1e-10))
    one = synth_function("constant", M)
    quad = quadrature_moment(one, spec.family.value, 0, 0, n_r=256)
    out.append(_entry("quadrature_constant_00", "constant", abs(quad.value - 1.0), 1e-6))
    return out


def run_suite(suite, family, p_max, size, seed=0, with_oracles=False) -> dict:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    spec = MomentSpec(family, p_max)
    images = corpus(size, seed)
    results = []
    if suite in ("rotation", "all"):
        results += rotation_suite(spec, size, images)
    if suite in ("reflection", "all"):
        results += reflection_suite(spec, size, images)
    if suite in ("translation", "all"):
        results += translation_suite(spec, size)
    if with_oracles:
        results += oracle_checks(spec, size)
    return {
        "schema": "orim/1",
        "suite": suite,
        "family": spec.family.value,
        "p_max": p_max,
        "size": size,
        "seed": seed,
        "results": results,
        "pass": all(r["pass"] for r in results),
    }
