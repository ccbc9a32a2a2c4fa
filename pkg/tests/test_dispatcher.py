import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spmiml.core import EmptyInputError, ShapeError
from spmiml.dispatcher import dispatch, dispatch_jacobian
from tests.cases import nondegenerate_point
from tests.oracles import central_difference


def test_hand_case():
    out = dispatch([0.2, 0.5, -0.3], [1, 1, 0])
    np.testing.assert_allclose(out.xi_raw, [0.2, 0.5, 0.0])
    np.testing.assert_allclose(out.xi_norm, [0.4, 1.0, 0.0])
    assert not out.degenerate


def test_single_label_gives_one_hot():
    out = dispatch([0.1, 0.7, 0.4], [0, 1, 0])
    np.testing.assert_array_equal(out.xi_norm, [0, 1, 0])


def test_degenerate_falls_back_to_label():
    out = dispatch([0.5, 0.5], [1, 1])
    assert out.degenerate
    np.testing.assert_array_equal(out.xi_norm, [1, 1])
    np.testing.assert_array_equal(dispatch_jacobian([0.5, 0.5], [1, 1]), np.zeros((2, 2)))


def test_all_negative_weights_are_degenerate():
    out = dispatch([-0.1, -0.2, 0.3], [1, 1, 0])
    assert out.degenerate
    np.testing.assert_array_equal(out.xi_norm, [1, 1, 0])


def test_errors():
    with pytest.raises(EmptyInputError):
        dispatch([0.1, 0.2], [0, 0])
    with pytest.raises(ShapeError):
        dispatch([0.1, 0.2], [1, 0, 1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=5, max_size=5),
       st.lists(st.integers(0, 1), min_size=5, max_size=5).filter(any),
       st.floats(0.01, 100))
def test_range_mask_top_and_scale(alpha, t, c):
    out = dispatch(alpha, t)
    xi = out.xi_norm
    assert np.all((0 <= xi) & (xi <= 1))
    if out.degenerate:
        np.testing.assert_array_equal(xi, t)
        return
    t = np.array(t)
    assert np.all(xi[t == 0] == 0)
    assert xi[np.argmax(np.maximum(alpha, 0) * t)] == 1.0
    scaled = dispatch(np.array(alpha) * c, t)
    assert not scaled.degenerate
    np.testing.assert_allclose(scaled.xi_norm, xi, atol=1e-12)


def test_jacobian_columns_masked_and_dead():
    alpha = np.array([0.3, 0.8, -0.4, 0.5])
    t = np.array([1, 1, 1, 0])
    J = dispatch_jacobian(alpha, t)
    assert np.all(J[:, 3] == 0)
    assert np.all(J[:, 2] == 0)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(50):
        K = int(rng.integers(2, 7))
        alpha, t, _ = nondegenerate_point(rng, K)
        J = dispatch_jacobian(alpha, t)
        for k in range(K):
            fd = central_difference(lambda a: dispatch(np.array(a), t).xi_norm[k], list(alpha))
            np.testing.assert_allclose(J[k], fd, atol=1e-7)
