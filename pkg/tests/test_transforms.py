import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orim.basis import MomentSpec, build_basis
from orim.data import synth_image
from orim.errors import DomainError
from orim.moments import compute_moments
from orim.transforms import (
    Interpolation,
    Kind,
    TransformSpec,
    apply,
    check_reflection_relation,
    check_rotation_relation,
    check_translation_invariance,
    rotate_bilinear,
)
from orim.unit_disk import build_grid
from orim.verify import corpus, two_blob_image

ZM9_64 = build_basis(MomentSpec("zm", 9), build_grid(64))

images = arrays(np.float64, (12, 12), elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=30, deadline=None)
@given(images)
def test_group_closure_bit_exact(img):
    np.testing.assert_array_equal(apply(img, TransformSpec.rotate90(0)), img)
    out = img
    for _ in range(4):
        out = apply(out, TransformSpec.rotate90(1))
    np.testing.assert_array_equal(out, img)
    for flip in (TransformSpec.flip_h(), TransformSpec.flip_v()):
        np.testing.assert_array_equal(apply(apply(img, flip), flip), img)


def test_spec_validation():
    with pytest.raises(DomainError):
        TransformSpec(Kind.ROTATE_ARBITRARY, alpha=0.3)
    with pytest.raises(DomainError):
        TransformSpec(Kind.FLIP_HORIZONTAL, interpolation=Interpolation.BILINEAR)
    with pytest.raises(DomainError):
        TransformSpec.rotate90(4)


def test_bilinear_quarter_turn_matches_grid_rotation():
    img = np.random.default_rng(0).random((9, 9))
    for k in (1, 2, 3):
        np.testing.assert_allclose(rotate_bilinear(img, k * np.pi / 2),
                                   apply(img, TransformSpec.rotate90(k)), atol=1e-12)
    np.testing.assert_array_equal(rotate_bilinear(img, 0.0), img)


def test_rotation_sign_matches_phase_relation():
    # A positive angle must rotate content so that OM(O) = OM(O_a) exp(-i q a).
    img = synth_image("blob", 64, cx=45.0, cy=31.5, sigma=4.0)
    res = check_rotation_relation(img, np.pi / 2, ZM9_64)
    assert res.max_relative <= 1e-9
    q = np.array([q for _, q in ZM9_64.pairs])
    om = compute_moments(img, ZM9_64).values
    om_rot = compute_moments(apply(img, TransformSpec.rotate90(1)), ZM9_64).values
    wrong = om - om_rot * np.exp(1j * q * np.pi / 2)
    assert np.max(np.abs(wrong)) > 1e-3 * np.max(np.abs(om))


@pytest.mark.parametrize("family,p_max", [("zm", 9), ("pzm", 5), ("ofmm", 5)])
def test_grid_exact_rotations_on_corpus(family, p_max):
    basis = build_basis(MomentSpec(family, p_max), build_grid(64))
    for img in corpus(64).values():
        assert check_rotation_relation(img, 0.0, basis).max_relative == 0.0
        for k in (1, 2, 3):
            res = check_rotation_relation(img, k * np.pi / 2, basis)
            assert res.max_relative <= 1e-9
            assert res.max_relative_magnitude <= 1e-9


def test_bilinear_thirty_degrees_on_smooth_blob():
    M = 128
    basis = build_basis(MomentSpec("zm", 9), build_grid(M))
    img = synth_image("blob", M, cx=M / 2 + 14, cy=M / 2 - 9, sigma=M / 10)
    res = check_rotation_relation(img, np.pi / 6, basis)
    assert res.max_relative_magnitude <= 0.03


@pytest.mark.parametrize("family,p_max", [("zm", 9), ("pzm", 5), ("ofmm", 5)])
def test_reflection_relations_on_corpus(family, p_max):
    basis = build_basis(MomentSpec(family, p_max), build_grid(64))
    for img in corpus(64).values():
        assert check_reflection_relation(img, basis).max_relative <= 1e-9


def test_horizontally_symmetric_image_has_imaginary_odd_q():
    img = np.random.default_rng(4).random((64, 64))
    img = img + img[::-1, :]
    om = compute_moments(img, ZM9_64).values
    q = np.array([q for _, q in ZM9_64.pairs])
    odd = q % 2 == 1
    assert np.max(np.abs(om[odd].real)) <= 1e-9 * np.max(np.abs(om))


def test_reflection_of_zero_image():
    res = check_reflection_relation(np.zeros((64, 64)), ZM9_64)
    assert res.max_relative == 0.0


def test_translation_examples():
    M = 64
    spec = MomentSpec("pzm", 5)
    img = two_blob_image(M)
    zero, small, big = check_translation_invariance(img, [(0, 0), (3, -2), (22, 0)], spec)
    assert zero.supported and zero.deviation == 0.0
    assert small.supported and small.deviation <= 1e-3
    assert not big.supported and np.isnan(big.deviation)


def test_translation_of_single_blob_with_mass_term():
    M = 64
    spec = MomentSpec("pzm", 5, include_q_zero=True)
    blob = synth_image("blob", M, sigma=M / 16)
    (res,) = check_translation_invariance(blob, [(3, -2)], spec)
    assert res.supported and res.deviation <= 1e-3


def test_translate_zero_fill():
    img = np.arange(16.0).reshape(4, 4)
    out = apply(img, TransformSpec.translate(1, -1))
    np.testing.assert_array_equal(out[1:, :3], img[:3, 1:])
    assert not out[0].any() and not out[:, 3].any()
