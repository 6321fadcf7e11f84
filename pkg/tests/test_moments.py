import numpy as np
import pytest

from orim.basis import MomentSpec, build_basis, enumerate_pairs, kernel_rows
from orim.data import synth_image
from orim.errors import DimensionError
from orim.moments import (
    MomentVector,
    compute_central_moments,
    compute_moments,
    extract_invariants,
    magnitudes,
)
from orim.oracle import quadrature_moment
from orim.unit_disk import build_grid

ZM9_00 = MomentSpec("zm", 9, include_q_zero=True)


def rim_free_bump(x, y):
    """Smooth, asymmetric, and vanishing to third order on the unit circle."""
    return np.clip(1 - x * x - y * y, 0, None) ** 3 * (1 + 0.5 * x + 0.3 * y * y - 0.4 * x * y)


def oracle_vector(func, spec, n_r=1024):
    return np.array([quadrature_moment(func, spec.family.value, p, q, n_r=n_r).value
                     for p, q in enumerate_pairs(spec)])


def test_constant_image_zeroth_moment():
    spec = MomentSpec("zm", 0, include_q_zero=True)
    errs = []
    for M in (64, 128, 256):
        om = compute_moments(np.ones((M, M)), build_basis(spec, build_grid(M))).values[0]
        errs.append(abs(om - 1.0))
    assert errs[0] < 5e-2
    assert errs[0] > errs[1] > errs[2]


def test_zero_image_gives_exact_zeros():
    basis = build_basis(MomentSpec("pzm", 5), build_grid(16))
    assert not compute_moments(np.zeros((16, 16)), basis).values.any()


def test_linearity():
    rng = np.random.default_rng(1)
    basis = build_basis(MomentSpec("ofmm", 5), build_grid(32))
    A, B = rng.random((2, 32, 32))
    a, b = 1.7, -0.3
    lhs = compute_moments(a * A + b * B, basis).values
    rhs = a * compute_moments(A, basis).values + b * compute_moments(B, basis).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(lhs))


def test_conjugate_repetition_gives_conjugate_moment():
    rng = np.random.default_rng(2)
    grid = build_grid(24)
    spec = MomentSpec("zm", 6)
    img = rng.random((24, 24))
    r, theta = grid.masked_polar()
    pairs = enumerate_pairs(spec)
    neg = kernel_rows(spec, r, theta, [(p, -q) for p, q in pairs])
    om_neg = grid.delta**2 * (neg @ img[grid.mask])
    om = compute_moments(img, build_basis(spec, grid)).values
    assert np.max(np.abs(om_neg - np.conj(om))) <= 1e-12 * np.max(np.abs(om))


def test_size_mismatch_raises():
    basis = build_basis(MomentSpec("zm", 3), build_grid(16))
    with pytest.raises(DimensionError):
        compute_moments(np.zeros((15, 15)), basis)
    with pytest.raises(DimensionError):
        compute_moments(np.zeros((16, 16, 2)), basis)


def test_vector_length_and_finiteness():
    basis = build_basis(MomentSpec("pzm", 7), build_grid(20))
    mv = compute_moments(np.random.default_rng(0).normal(size=(20, 20)), basis)
    assert len(mv) == len(enumerate_pairs(basis.spec)) == 28
    assert np.all(np.isfinite(mv.values))


def test_r_squared_against_quadrature_oracle():
    # Zeroth-order sum of an image that is 1 on the rim; the stated target is
    # 1e-2 relative at M = 128.
    func = lambda x, y: x * x + y * y  # noqa: E731
    ref = oracle_vector(func, ZM9_00, n_r=512)
    grid = build_grid(128)
    om = compute_moments(func(grid.x, grid.y), build_basis(ZM9_00, grid)).values
    assert np.linalg.norm(om - ref) / np.linalg.norm(ref) < 1e-2


def test_rim_free_image_converges_monotonically():
    ref = oracle_vector(rim_free_bump, ZM9_00)
    errs = []
    for M in (32, 64, 128, 256):
        grid = build_grid(M)
        om = compute_moments(rim_free_bump(grid.x, grid.y), build_basis(ZM9_00, grid)).values
        errs.append(np.abs(om - ref))
    errs = np.array(errs)
    assert np.all(np.diff(errs, axis=0) < 0)
    assert np.linalg.norm(errs[2]) / np.linalg.norm(ref) < 1e-2


def test_central_moments_of_centred_mass_match_standard():
    M = 33
    img = synth_image("blob", M, sigma=4.0)
    spec = MomentSpec("pzm", 5)
    a = compute_central_moments(img, spec).values
    b = compute_moments(img, build_basis(spec, build_grid(M))).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_central_moments_of_shifted_blob():
    # A single Gaussian is radially symmetric about its own centroid, so every
    # q >= 1 coefficient is round-off; the (0, 0) term supplies the scale.
    M = 64
    spec = MomentSpec("pzm", 5, include_q_zero=True)
    a = synth_image("blob", M, cx=M / 2, cy=M / 2, sigma=M / 16)
    b = synth_image("blob", M, cx=M / 2 + 3, cy=M / 2, sigma=M / 16)
    ma = np.abs(compute_central_moments(a, spec).values)
    mb = np.abs(compute_central_moments(b, spec).values)
    assert np.max(np.abs(ma - mb)) / np.max(ma) <= 1e-3


def test_central_moments_of_zero_image():
    out = compute_central_moments(np.zeros((12, 12)), MomentSpec("zm", 4)).values
    assert not out.any()


def test_magnitudes():
    spec = MomentSpec("zm", 2)
    mv = MomentVector(spec, enumerate_pairs(spec), np.array([3 + 4j, -2.0 + 0j]), 8)
    np.testing.assert_array_equal(magnitudes(mv).magnitudes, [5.0, 2.0])


def test_magnitudes_survive_quarter_turn():
    rng = np.random.default_rng(5)
    img = rng.random((64, 64))
    basis = build_basis(MomentSpec("zm", 9), build_grid(64))
    a = magnitudes(compute_moments(img, basis)).magnitudes
    b = magnitudes(compute_moments(np.rot90(img), basis)).magnitudes
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(a)


def test_extract_invariants_single_channel_matches_magnitudes():
    rng = np.random.default_rng(6)
    img = rng.random((16, 16))
    spec = MomentSpec("pzm", 4)
    for central in (False, True):
        feats = extract_invariants(img[:, :, None], spec, central=central)
        if central:
            ref = np.abs(compute_central_moments(img, spec).values)
        else:
            ref = np.abs(compute_moments(img, build_basis(spec, build_grid(16))).values)
        np.testing.assert_allclose(feats.magnitudes, ref, rtol=1e-12, atol=1e-15)
        assert np.all(feats.magnitudes >= 0)


def test_extract_invariants_length_and_channel_permutation():
    rng = np.random.default_rng(7)
    stack = rng.random((8, 8, 10))
    spec = MomentSpec("zm", 9)
    feats = extract_invariants(stack, spec)
    assert len(feats) == 250 and feats.n_channels == 10
    perm = rng.permutation(10)
    permuted = extract_invariants(stack[:, :, perm], spec).magnitudes.reshape(10, 25)
    np.testing.assert_array_equal(permuted, feats.magnitudes.reshape(10, 25)[perm])


def test_extract_invariants_normalize_flag():
    stack = np.random.default_rng(8).random((8, 8, 3))
    feats = extract_invariants(stack, MomentSpec("pzm", 3), normalize=True)
    assert np.linalg.norm(feats.magnitudes) == pytest.approx(1.0)


def test_extract_invariants_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        extract_invariants(np.zeros((8, 9, 2)), MomentSpec("zm", 2))
    with pytest.raises(DimensionError):
        extract_invariants(np.zeros((8, 8, 0)), MomentSpec("zm", 2))
