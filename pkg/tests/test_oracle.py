from fractions import Fraction

import numpy as np
import pytest

from orim.oracle import (
    brute_group_conv,
    enumerate_pairs_brute,
    group_matrices,
    quadrature_moment,
    rational_eval,
    rational_radial,
)


def one(x, y):
    return np.ones(np.broadcast(x, y).shape)


def test_rational_radial_examples():
    assert rational_radial("zm", 2, 0) == [-1, 0, 2]
    assert rational_radial("zm", 4, 0) == [1, 0, -6, 0, 6]
    assert rational_radial("pzm", 1, 1) == [0, 1]
    assert rational_eval(rational_radial("zm", 2, 0), 0.5) == Fraction(-1, 2)


def test_rational_radial_rejects_bad_input():
    with pytest.raises(ValueError):
        rational_radial("zm", 3, 0)
    with pytest.raises(ValueError):
        rational_radial("pzm", 16, 0)


def test_quadrature_constant_image():
    res = quadrature_moment(one, "zm", 0, 0)
    assert abs(res.value - 1.0) < 1e-6
    for q in (1, 2, 3):
        assert abs(quadrature_moment(one, "pzm", 3, q, n_r=256).value) < 1e-10


def test_quadrature_r_squared_zm20():
    res = quadrature_moment(lambda x, y: x * x + y * y, "zm", 2, 0)
    assert abs(res.value - 0.5) < 1e-6
    assert res.error_estimate < 1e-5


def test_quadrature_refuses_coarse_grids():
    with pytest.raises(ValueError):
        quadrature_moment(one, "zm", 0, 0, n_r=64)


def test_brute_pairs():
    assert enumerate_pairs_brute("zm", 2) == [(1, 1), (2, 2)]
    assert len(enumerate_pairs_brute("ofmm", 5)) == 15


def test_group_matrices_are_closed():
    for order in (1, 4, 8):
        mats = group_matrices(order)
        assert len(mats) == order
        keys = {m.tobytes() for m in mats}
        for a in mats:
            for b in mats:
                assert (a @ b).tobytes() in keys


def test_brute_conv_delta_and_zero_filters():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 5, 1, 1))
    delta = np.zeros((3, 3, 1, 1, 1))
    delta[1, 1] = 1.0
    out = brute_group_conv(x, delta, 4)
    for g in range(4):
        np.testing.assert_array_equal(out[:, :, g, 0], x[:, :, 0, 0])
    assert not brute_group_conv(x, np.zeros_like(delta), 8).any()


def test_brute_conv_refuses_large_inputs():
    with pytest.raises(ValueError):
        brute_group_conv(np.zeros((9, 9, 1, 1)), np.zeros((3, 3, 1, 1, 1)), 4)
