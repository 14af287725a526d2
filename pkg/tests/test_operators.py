"""Identity-plus-kernel algebra: composition, solves, delta handling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xferscat import OperatorRep, build_grid_2d, op_add, op_compose, op_solve, op_solve_delta
from xferscat.errors import GridMismatch, SingularOperator


@pytest.fixture()
def grid():
    return build_grid_2d(1.0, 16, theta0=0.1, thetas=[0.5, -0.8])


def random_op(grid, rng, c=0.0):
    kernel = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    op = OperatorRep.from_kernel(grid, 0.1 * kernel, delta_nodes=(grid.i_p0,))
    return OperatorRep(grid, c, op.kernel_w, op.delta_cols)


def test_compose_with_identity(grid):
    rng = np.random.default_rng(0)
    x = random_op(grid, rng)
    ident = OperatorRep.identity(grid)
    for pair in ((ident, x), (x, ident)):
        comp = op_compose(*pair)
        assert comp.c == x.c
        np.testing.assert_array_equal(comp.kernel_w, x.kernel_w)
        np.testing.assert_array_equal(comp.delta_cols[grid.i_p0], x.delta_cols[grid.i_p0])


def test_compose_with_zero(grid):
    rng = np.random.default_rng(1)
    x = random_op(grid, rng)
    comp = op_compose(OperatorRep.zero(grid), x)
    assert comp.c == 0
    assert np.abs(comp.kernel_w).max() == 0
    assert np.abs(comp.delta_cols[grid.i_p0]).max() == 0


def test_compose_pure_kernels_have_zero_identity(grid):
    rng = np.random.default_rng(2)
    a, b = random_op(grid, rng), random_op(grid, rng)
    assert op_compose(a, b).c == 0


def test_compose_matches_dense_product(grid):
    rng = np.random.default_rng(3)
    a = random_op(grid, rng, c=0.7 - 0.2j)
    b = random_op(grid, rng, c=-0.4 + 1.0j)
    comp = op_compose(a, b)
    np.testing.assert_allclose(comp.matrix(), a.matrix() @ b.matrix(), atol=1e-13)


def test_compose_delta_consistency(grid):
    # applying (a o b) to the delta equals applying a to (b delta)
    rng = np.random.default_rng(4)
    a = random_op(grid, rng, c=0.5)
    b = random_op(grid, rng, c=1.0)
    comp = op_compose(a, b)
    c_ab, smooth_ab = comp.apply_to_delta(grid.i_p0)
    cb, smooth_b = b.apply_to_delta(grid.i_p0)
    ca, smooth_a = a.apply_to_delta(grid.i_p0)
    expected = cb * smooth_a + a.apply(smooth_b)
    assert c_ab == ca * cb
    np.testing.assert_allclose(smooth_ab, expected, atol=1e-13)


def test_grid_mismatch_raises(grid):
    other = build_grid_2d(2.0, 16)
    with pytest.raises(GridMismatch):
        op_compose(OperatorRep.identity(grid), OperatorRep.identity(other))


def test_solve_identity_and_scaled(grid):
    rng = np.random.default_rng(5)
    b = rng.standard_normal(grid.n) + 0j
    ident = OperatorRep.identity(grid)
    np.testing.assert_allclose(op_solve(ident, b), b)
    doubled = OperatorRep(grid, 2.0, np.zeros((grid.n, grid.n), complex))
    np.testing.assert_allclose(op_solve(doubled, b), b / 2.0)


def test_solve_residual_reported(grid):
    rng = np.random.default_rng(6)
    a = random_op(grid, rng, c=1.0)
    b = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    x, residual = op_solve(a, b, return_residual=True)
    assert residual <= 1e-10 * np.linalg.norm(b)
    np.testing.assert_allclose(a.apply(x), b, atol=1e-10)


def test_solve_then_compose_is_identity(grid):
    rng = np.random.default_rng(7)
    a = random_op(grid, rng, c=1.0)
    v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    recovered = op_solve(a, a.apply(v))
    assert np.abs(recovered - v).max() <= 1e-10 * np.abs(v).max()


def test_singular_operator_detected(grid):
    n = grid.n
    kernel_w = np.zeros((n, n), complex)
    kernel_w[0, 0] = -1.0  # makes (I + K) singular in the first row
    op = OperatorRep(grid, 1.0, kernel_w)
    with pytest.raises(SingularOperator):
        op_solve(op, np.ones(n, complex))


def test_solve_delta_decomposition(grid):
    rng = np.random.default_rng(8)
    a = random_op(grid, rng, c=1.3 - 0.1j)
    coeff, smooth = op_solve_delta(a, grid.i_p0)
    # (c I + K)(coeff delta + smooth) = delta needs coeff = 1/c for the delta
    # part and coeff * (K delta) + (c I + K) smooth = 0 for the smooth part
    assert coeff == pytest.approx(1.0 / a.c)
    _, kcol = a.apply_to_delta(grid.i_p0)
    np.testing.assert_allclose(coeff * kcol + a.apply(smooth), np.zeros(grid.n), atol=1e-12)


def test_apply_to_delta_requires_registered_node(grid):
    op = OperatorRep.from_kernel(grid, np.zeros((grid.n, grid.n), complex), delta_nodes=())
    with pytest.raises(KeyError):
        op.apply_to_delta(grid.i_p0)


@settings(max_examples=25, deadline=None)
@given(
    ca=st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
    cb=st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_compose_application_property(ca, cb, seed):
    """(a o b) phi == a(b(phi)) for arbitrary identity coefficients."""
    grid = build_grid_2d(1.0, 8)
    rng = np.random.default_rng(seed)
    a = random_op(grid, rng, c=ca)
    b = random_op(grid, rng, c=cb)
    phi = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    left = op_compose(a, b).apply(phi)
    right = a.apply(b.apply(phi))
    np.testing.assert_allclose(left, right, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    fa=st.floats(-2, 2, allow_nan=False),
    fb=st.floats(-2, 2, allow_nan=False),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_linear_combination_property(fa, fb, seed):
    grid = build_grid_2d(1.0, 8)
    rng = np.random.default_rng(seed)
    a = random_op(grid, rng, c=0.3)
    b = random_op(grid, rng, c=-0.1j)
    phi = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    left = op_add(a, b, fa, fb).apply(phi)
    right = fa * a.apply(phi) + fb * b.apply(phi)
    np.testing.assert_allclose(left, right, atol=1e-12)
