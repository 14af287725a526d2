"""2D dynamics: Hamiltonian structure, transfer-matrix properties.

The frozen expected values for the delta barrier come from the nilpotency
of the coupling matrix K = [[1, 1], [-1, -1]] (K^2 = 0): with a single
lattice node and zeta = z/(2 varpi), M = I - i zeta K exactly.
"""

import math

import numpy as np
import pytest
import scipy.linalg

from xferscat import (
    DeltaComb,
    GaussianBump,
    GaussianProfile,
    RationalDeformation2D,
    Sum2D,
    ZERO_2D,
    add_potentials,
    build_grid_2d,
    build_lattice,
    delta_transfer_matrix,
    hamiltonian,
    potential_operator,
    transfer_matrix,
)
from xferscat.dynamics2d import _SliceEngine, _raw_product, _state_parts, delta_hamiltonian
from xferscat.errors import CombRequiresLattice, NoConvergence


@pytest.fixture()
def grid():
    return build_grid_2d(1.0, 32, theta0=0.1, thetas=[0.4, -1.1, 2.0])


DEFORMATION = RationalDeformation2D(GaussianProfile(), alpha=1.0, m=0, a=1.0, amplitude=1.0)


# ---------------------------------------------------------------------------
# potential operator
# ---------------------------------------------------------------------------


def test_zero_potential_operator(grid):
    op = potential_operator(ZERO_2D, 0.0, grid)
    assert np.abs(op.kernel_w).max() == 0.0
    assert op.c == 0


def test_potential_operator_linearity(grid):
    v1 = GaussianBump(amplitude=0.5)
    v2 = GaussianBump(amplitude=0.25j, sigma=(0.7, 1.3))
    k_sum = potential_operator(add_potentials(v1, v2), 0.3, grid).kernel_w
    k_sep = potential_operator(v1, 0.3, grid).kernel_w + potential_operator(v2, 0.3, grid).kernel_w
    np.testing.assert_allclose(k_sum, k_sep, atol=1e-15)


def test_deformation_kernel_vanishes_at_nodes(grid):
    # the computational heart of the invisibility theorem: |p_i - p_j| < 2k
    # stays below the transform's support edge 2 alpha when k <= alpha
    op = potential_operator(DEFORMATION, 0.0, grid)
    assert np.abs(op.kernel_w).max() == 0.0
    assert np.abs(op.delta_cols[grid.i_p0]).max() == 0.0


def test_comb_requires_lattice(grid):
    with pytest.raises(CombRequiresLattice):
        potential_operator(DeltaComb((1.0,), 1.0), 0.0, grid)


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------


def test_hamiltonian_at_x0_is_coupling_pattern(grid):
    v = GaussianBump(amplitude=0.8 + 0.1j)
    h = hamiltonian(v, 0.0, grid)
    base = potential_operator(v, 0.0, grid).kernel_w / (2.0 * grid.varpi[:, None])
    np.testing.assert_allclose(h.m11.kernel_w, base, atol=1e-15)
    np.testing.assert_allclose(h.m12.kernel_w, base, atol=1e-15)
    np.testing.assert_allclose(h.m21.kernel_w, -base, atol=1e-15)
    np.testing.assert_allclose(h.m22.kernel_w, -base, atol=1e-15)


def test_hamiltonian_traceless(grid):
    v = GaussianBump(amplitude=1.0 - 2.0j, beta=0.4)
    for x in (0.0, 0.37, -1.2):
        h = hamiltonian(v, x, grid)
        dense = h.dense()
        norm = np.abs(dense).max()
        assert abs(np.trace(dense)) <= 1e-14 * max(norm, 1e-300)
        diag11 = np.diag(h.m11.kernel_w)
        diag22 = np.diag(h.m22.kernel_w)
        assert np.abs(diag11 + diag22).max() <= 1e-16


def test_hamiltonian_linear_in_potential(grid):
    v = GaussianBump(amplitude=0.3 - 0.7j)
    h1 = hamiltonian(v, 0.5, grid).dense()
    h2 = hamiltonian(GaussianBump(amplitude=0.6 - 1.4j), 0.5, grid).dense()
    np.testing.assert_allclose(h2, 2.0 * h1, rtol=1e-14)


def test_hamiltonian_nilpotent(grid):
    h = hamiltonian(GaussianBump(amplitude=1.5), 0.8, grid).dense()
    assert np.abs(h @ h).max() <= 1e-14 * np.abs(h).max() ** 2 * grid.n


# ---------------------------------------------------------------------------
# transfer matrix, smooth backend
# ---------------------------------------------------------------------------


def test_zero_potential_transfer_matrix(grid):
    tm = transfer_matrix(ZERO_2D, grid)
    assert tm.slices == 1
    assert np.abs(tm.qq - np.eye(2 * grid.n_quad)).max() == 0.0
    assert np.abs(tm.aq).max() == 0.0
    assert np.abs(tm.dq).max() == 0.0
    assert tm.det_estimate == 1.0


def test_invisible_potential_gives_identity(grid):
    # one-sided support at alpha = 1 and k = 1 <= alpha: M = I exactly
    tm = transfer_matrix(DEFORMATION, grid)
    assert tm.slices == 1
    assert np.abs(tm.qq - np.eye(2 * grid.n_quad)).max() == 0.0
    assert np.abs(tm.da).max() == 0.0


def test_single_slice_equals_expm(grid):
    # exp(-i h H) = I - i h H for the nilpotent generator; scipy expm agrees
    v = GaussianBump(amplitude=0.7 + 0.3j)
    engine = _SliceEngine(v, grid)
    pq, pa = _raw_product(engine, -2.0, 2.0, 1)
    h_mid = hamiltonian(v, 0.0, grid).dense()
    full = scipy.linalg.expm(-4.0j * h_mid)
    nq, n = grid.n_quad, grid.n
    idx = np.r_[0:nq, n : n + nq]
    qq, aq, dq, da = _state_parts(grid, pq, pa)
    assert np.abs(qq - full[np.ix_(idx, idx)]).max() <= 1e-13


def test_det_one_and_convergence_metadata():
    grid = build_grid_2d(1.0, 48, 0.0, [0.7])
    v = GaussianBump(amplitude=1.0 + 0.4j)
    tm = transfer_matrix(v, grid, tol=1e-8)
    assert tm.converged
    assert tm.conv_estimate <= 1e-8
    assert abs(tm.det_estimate - 1.0) <= 1e-8
    assert tm.slices >= 4


def test_weak_coupling_first_order_dyson():
    # M - I = -i int H dx + O(z^2); the integral is evaluated by independent
    # Gauss-Legendre quadrature in x over the support
    grid = build_grid_2d(1.0, 24, 0.0, [])
    z = 1e-3
    v = GaussianBump(amplitude=z)
    tm = transfer_matrix(v, grid, tol=1e-9)
    xg, wg = np.polynomial.legendre.leggauss(400)
    lo, hi = -8.0, 8.0
    xs = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
    ws = 0.5 * (hi - lo) * wg
    acc = np.zeros((2 * grid.n, 2 * grid.n), dtype=complex)
    for x, wx in zip(xs, ws):
        acc += hamiltonian(v, float(x), grid).dense() * wx
    m_dense = tm.block_operator().dense()
    resid = np.abs((m_dense - np.eye(2 * grid.n)) + 1j * acc).max()
    # second Dyson term scale: (sup int |H|)^2; frozen bound with margin
    assert resid <= 50.0 * z**2


def test_composition_property():
    # split the support at an interior point: M = M_right . M_left
    grid = build_grid_2d(1.2, 32, 0.2, [0.5, -0.7])
    v = GaussianBump(amplitude=0.9 - 0.2j, sigma=(0.6, 1.0))
    tol = 1e-9
    full = transfer_matrix(v, grid, x_range=(-4.8, 4.8), tol=tol)
    left = transfer_matrix(v, grid, x_range=(-4.8, 0.7), tol=tol)
    right = transfer_matrix(v, grid, x_range=(0.7, 4.8), tol=tol)
    composed = right.block_operator().compose(left.block_operator())
    direct = full.block_operator()
    diff = np.abs(composed.dense() - direct.dense()).max()
    scale = np.abs(direct.dense() - np.eye(2 * grid.n)).max()
    assert diff <= 100.0 * tol * scale
    dcol_c = composed.m21.delta_cols[grid.i_p0]
    dcol_d = direct.m21.delta_cols[grid.i_p0]
    assert np.abs(dcol_c - dcol_d).max() <= 100.0 * tol * max(np.abs(dcol_d).max(), scale)


def test_convergence_order_is_two_without_extrapolation():
    grid = build_grid_2d(1.0, 24, 0.0, [])
    v = GaussianBump(amplitude=1.0, sigma=(0.5, 1.0))
    ref = transfer_matrix(v, grid, tol=1e-12)
    errs = []
    for s in (64, 128, 256):
        tm = transfer_matrix(v, grid, slices=s, tol=np.inf, max_doublings=1, extrapolate=False)
        # with tol = inf the first doubling comparison accepts at 2 s slices
        errs.append((tm.slices, np.abs(tm.qq - ref.qq).max()))
    ratios = [errs[i][1] / errs[i + 1][1] for i in range(len(errs) - 1)]
    assert all(r >= 3.8 for r in ratios)


def test_no_convergence_raises():
    grid = build_grid_2d(1.0, 16, 0.0, [])
    v = GaussianBump(amplitude=1.0)
    with pytest.raises(NoConvergence):
        transfer_matrix(v, grid, slices=1, tol=1e-14, max_doublings=2)


# ---------------------------------------------------------------------------
# delta-comb backend
# ---------------------------------------------------------------------------


def test_delta_single_node_closed_form():
    # zeta = z/(2 varpi(p0)) = 1: M = I - i zeta K = [[1-i, -i], [i, 1+i]]
    comb = DeltaComb((2.0,), alpha1=3.0)
    lat = build_lattice(1.0, 0.0, comb)
    tm = delta_transfer_matrix(comb, lat)
    expected = np.array([[1 - 1j, -1j], [1j, 1 + 1j]])
    assert np.abs(tm.mat - expected).max() <= 1e-14
    assert abs(tm.det_estimate - 1.0) <= 1e-14


def test_delta_zero_comb_is_identity():
    comb = DeltaComb((0.0, 0.0, 0.0), alpha1=1.0)
    lat = build_lattice(2.0, 0.0, comb)
    tm = delta_transfer_matrix(comb, lat)
    assert np.abs(tm.mat - np.eye(2 * lat.n)).max() == 0.0


def test_delta_hamiltonian_structure_and_nilpotency():
    comb = DeltaComb((0.3j, 1.0, 0.5), alpha1=0.7)
    lat = build_lattice(2.0, 0.13, comb)
    hd = delta_hamiltonian(comb, lat)
    assert abs(np.trace(hd)) <= 1e-15
    assert np.abs(hd @ hd).max() <= 1e-14
    # coupling only within the truncation band
    L = lat.n
    z = hd[:L, :L] * (2.0 * lat.varpi[:, None])
    for i in range(L):
        for j in range(L):
            dn = int(lat.orders[i] - lat.orders[j])
            assert z[i, j] == comb.coefficient(dn)


def test_delta_matches_exact_exponential():
    comb = DeltaComb((0.2, 0.5 + 0.1j, 1.0, 0.5 + 0.1j, 0.2), alpha1=0.9)
    lat = build_lattice(2.5, 0.2, comb)
    tm = delta_transfer_matrix(comb, lat)
    hd = delta_hamiltonian(comb, lat)
    np.testing.assert_allclose(tm.mat, np.eye(2 * lat.n) - 1j * hd, atol=1e-14)
