"""Potential families: pointwise values, transforms, deformations, supports.

Expected values marked with a quadrature oracle are integrals computed
independently with scipy.integrate.quad (or Gauss-Legendre) against the
analytic formulas under test.
"""

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from xferscat import (
    DeltaComb,
    Gaussian3D,
    GaussianBump,
    GaussianProfile,
    RationalDeformation2D,
    RationalDeformation3D,
    Sum2D,
    Tabulated2D,
    ZERO_2D,
    add_potentials,
    check_onesided_support,
    construct_deformation_2d,
    construct_deformation_3d,
    deformation_amplitude_3d,
    difference,
    eval_position,
    eval_position_3d,
    fourier_xy,
    fourier_y,
    from_json,
    full_fourier_2d,
    scale_potential,
    support_x,
    to_json,
)
from xferscat.errors import (
    CombRequiresLattice,
    DimensionMismatch,
    DistributionalVariant,
    UnsupportedFamily,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def complex_quad(f, a, b, **kw):
    re = quad(lambda t: f(t).real, a, b, **kw)[0]
    im = quad(lambda t: f(t).imag, a, b, **kw)[0]
    return re + 1j * im


# ---------------------------------------------------------------------------
# eval_position
# ---------------------------------------------------------------------------


def test_gaussian_peak_value():
    v = GaussianBump(amplitude=1.0)
    assert eval_position(v, 0.0, 0.0) == pytest.approx(1.0)


def test_sum_linearity_at_peak():
    v = GaussianBump(amplitude=1.0)
    assert eval_position(add_potentials(v, v), 0.0, 0.0) == pytest.approx(2.0)


def test_rational_deformation_closed_form_at_origin():
    # u(x, y) = g(x) z m! exp(2 i alpha y) / (a - i y)^(m+1); at origin this is 1.
    u = RationalDeformation2D(GaussianProfile(), alpha=1.0, m=0, a=1.0, amplitude=1.0)
    assert eval_position(u, 0.0, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("m,a", [(0, 1.0), (1, 2.0), (3, 0.7)])
def test_rational_deformation_matches_quadrature(m, a):
    # oracle: u(x,y) = g(x) exp(2 i alpha y) * int_0^inf q^m exp(-a q) exp(i y q) dq
    alpha, amp = 1.0, 0.8 - 0.3j
    u = RationalDeformation2D(GaussianProfile(), alpha=alpha, m=m, a=a, amplitude=amp)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x, y = rng.uniform(-2, 2, size=2)
        integral = complex_quad(
            lambda q: q**m * np.exp(-a * q) * np.exp(1j * y * q), 0, 80 / a, limit=300
        )
        expected = math.exp(-(x**2) / 2) * amp * np.exp(2j * alpha * y) * integral
        assert eval_position(u, x, y) == pytest.approx(expected, rel=1e-10)


def test_construct_deformation_2d_m1_a2_closed_form():
    # spec example: base=0, m=1, a=2 -> u = g(x) exp(2iy) 1!/(2 - i y)^2
    u = construct_deformation_2d(None, alpha=1.0, m=1, a=2.0, amplitude=1.0)
    y = 0.63
    oracle = complex_quad(lambda q: q * np.exp(-(2.0 - 1j * y) * q), 0, 60, limit=300)
    assert oracle == pytest.approx(1.0 / (2.0 - 1j * y) ** 2, rel=1e-10)
    got = eval_position(u, 0.4, y)
    assert got == pytest.approx(math.exp(-0.08) * np.exp(2j * y) / (2.0 - 1j * y) ** 2, rel=1e-12)


def test_delta_comb_pointwise_raises():
    comb = DeltaComb((1.0, 2.0, 1.0), alpha1=1.0)
    with pytest.raises(DistributionalVariant):
        eval_position(comb, 0.0, 0.0)
    # y-profile is still a smooth function
    assert comb.y_profile(0.0) == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# fourier_y
# ---------------------------------------------------------------------------


def test_gaussian_fourier_at_zero_vs_quadrature():
    v = GaussianBump(amplitude=1.0)
    oracle = quad(lambda y: math.exp(-(y**2) / 2), -40, 40)[0]
    assert oracle == pytest.approx(SQRT_2PI, rel=1e-12)
    assert fourier_y(v, 0.0, 0.0) == pytest.approx(SQRT_2PI, rel=1e-12)


def test_rational_fourier_one_sided_values():
    u = RationalDeformation2D(GaussianProfile(), alpha=1.0, m=0, a=1.0, amplitude=1.0)
    assert fourier_y(u, 0.0, 1.0) == 0.0
    # K_y = 3 (above 2 alpha): oracle integral of exp(-q) shifted by q = K_y - 2 alpha
    expected = 2.0 * math.pi * math.exp(-1.0)
    assert fourier_y(u, 0.0, 3.0) == pytest.approx(expected, rel=1e-12)


def test_fourier_y_matches_direct_quadrature_gaussian():
    # v~(x, K) = int dy exp(-i K y) v(x, y), computed by adaptive quadrature
    v = GaussianBump(amplitude=1.3 - 0.4j, center=(0.3, -0.7), sigma=(0.8, 1.2), beta=0.9)
    rng = np.random.default_rng(11)
    for _ in range(4):
        x = rng.uniform(-1.5, 1.5)
        ky = rng.uniform(-4.0, 6.0)
        oracle = complex_quad(
            lambda y: np.exp(-1j * ky * y) * eval_position(v, x, y), -60, 60, limit=600
        )
        got = fourier_y(v, x, ky)
        assert got == pytest.approx(oracle, abs=1e-8 * (1 + abs(oracle)))


def _rational_ft_oracle(q: float, a: float, m: int) -> float:
    """integral dy exp(-i q y) / (a - i y)^(m+1), by infinite oscillatory quadrature.

    The integrand decays only algebraically, so a truncated adaptive quad
    cannot reach 1e-8; scipy's QAWF handles the oscillatory tails.  The
    parity split uses that the real/imaginary parts of the integrand are
    even/odd for real a.
    """

    def hr(y):
        return (((a + 1j * y) ** (m + 1)) / (a * a + y * y) ** (m + 1)).real

    def hi(y):
        return (((a + 1j * y) ** (m + 1)) / (a * a + y * y) ** (m + 1)).imag

    w = abs(q)
    c = quad(hr, 0, np.inf, weight="cos", wvar=w, limit=300)[0]
    s = quad(hi, 0, np.inf, weight="sin", wvar=w, limit=300)[0]
    return 2.0 * c + (2.0 * s if q > 0 else -2.0 * s)


def test_fourier_y_matches_direct_quadrature_rational():
    v = RationalDeformation2D(
        GaussianProfile(0.2, 0.9), alpha=1.0, m=2, a=1.5, amplitude=0.5 + 1j
    )
    rng = np.random.default_rng(11)
    for _ in range(6):
        x = rng.uniform(-1.5, 1.5)
        ky = rng.uniform(-2.0, 6.0)
        oracle = (
            v.envelope(x)
            * v.amplitude
            * math.factorial(v.m)
            * _rational_ft_oracle(ky - 2.0 * v.alpha, v.a, v.m)
        )
        got = fourier_y(v, x, ky)
        assert got == pytest.approx(oracle, abs=1e-8 * (1 + abs(oracle)))


def test_full_fourier_2d_matches_nested_quadrature():
    v = GaussianBump(amplitude=0.7 + 0.2j, center=(0.4, 0.1), sigma=(0.9, 1.1), beta=0.5)
    qx, qy = 0.8, -1.3
    inner = fourier_y(v, 0.0, qy) / math.exp(-(0.4**2) / (2 * 0.81))  # y-part alone
    oracle_x = complex_quad(
        lambda x: np.exp(-1j * qx * x) * math.exp(-((x - 0.4) ** 2) / (2 * 0.81)), -40, 40
    )
    assert full_fourier_2d(v, qx, qy) == pytest.approx(inner * oracle_x, rel=1e-10)


def test_comb_fourier_requires_lattice():
    comb = DeltaComb((1.0,), alpha1=1.0)
    with pytest.raises(CombRequiresLattice):
        fourier_y(comb, 0.0, 0.0)


def test_tabulated_fourier_approximates_analytic():
    v = GaussianBump(amplitude=1.0)
    xs = np.linspace(-6, 6, 121)
    ys = np.linspace(-8, 8, 401)
    vals = eval_position(v, xs[:, None], ys[None, :])
    tab = Tabulated2D(xs[0], ys[0], xs[1] - xs[0], ys[1] - ys[0], tuple(map(tuple, vals.tolist())))
    for ky in (0.0, 1.0, -2.0):
        assert fourier_y(tab, 0.0, ky) == pytest.approx(fourier_y(v, 0.0, ky), rel=1e-3, abs=1e-3)


# ---------------------------------------------------------------------------
# one-sidedness
# ---------------------------------------------------------------------------


def test_one_sidedness_random_points_exact_zero():
    rng = np.random.default_rng(1234)
    u = RationalDeformation2D(GaussianProfile(), alpha=1.3, m=1, a=0.8, amplitude=2.0 - 1j)
    x = rng.uniform(-8, 8, size=1000)
    ky = 2 * 1.3 - rng.exponential(2.0, size=1000) - 1e-12
    vals = fourier_y(u, x, ky)
    assert np.all(vals == 0.0)


def test_check_onesided_support_verdicts():
    u = RationalDeformation2D(GaussianProfile(), alpha=1.0, m=0, a=1.0, amplitude=1.0)
    rep = check_onesided_support(u, 1.0)
    assert rep.passed and rep.max_forbidden == 0.0 and rep.scale > 0

    g = GaussianBump(amplitude=1.0)
    rep_g = check_onesided_support(g, 1.0)
    assert not rep_g.passed

    comb = DeltaComb((0.0, 0.0, 0.0, 1.0, 0.0), alpha1=3.0)  # only z_{+1} nonzero
    rep_c = check_onesided_support(comb, 1.0)
    assert rep_c.exact and rep_c.passed  # 1 * 3 > 2

    comb_bad = DeltaComb((0.0, 1.0, 0.0), alpha1=3.0)  # z_0 != 0
    assert not check_onesided_support(comb_bad, 1.0).passed


def test_check_onesided_support_3d():
    u = RationalDeformation3D(1.0, alpha=1.0, ax=1.0, ay=1.0, az=1.0, nx=1, ny=1)
    rep = check_onesided_support(u, 1.0)
    assert rep.passed and rep.max_forbidden == 0.0
    assert not check_onesided_support(Gaussian3D(), 1.0).passed


# ---------------------------------------------------------------------------
# difference / algebra
# ---------------------------------------------------------------------------


def test_difference_annihilates_itself():
    v = GaussianBump(amplitude=1.0 - 0.5j)
    d = difference(v, v)
    pts = np.random.default_rng(0).uniform(-3, 3, size=(20, 2))
    for x, y in pts:
        assert abs(eval_position(d, x, y)) < 1e-15
        assert abs(fourier_y(d, x, 1.7)) < 1e-15


def test_difference_recovers_added_piece():
    base = GaussianBump(amplitude=1.0)
    u = RationalDeformation2D(GaussianProfile(), alpha=1.0, m=0, a=1.0, amplitude=0.5j)
    v2 = add_potentials(base, u)
    d = difference(v2, base)
    for ky in (2.5, 3.0, 4.2):
        assert fourier_y(d, 0.3, ky) == pytest.approx(fourier_y(u, 0.3, ky), rel=1e-14)


def test_difference_of_scaled_gaussians():
    g2 = GaussianBump(amplitude=2.0)
    g1 = GaussianBump(amplitude=1.0)
    d = difference(g2, g1)
    x, y = 0.7, -0.4
    assert eval_position(d, x, y) == pytest.approx(eval_position(g1, x, y), rel=1e-14)


def test_difference_plus_v1_equals_v2():
    v1 = GaussianBump(amplitude=0.6 + 0.1j)
    v2 = GaussianBump(amplitude=-0.3, sigma=(0.7, 1.4))
    recon = add_potentials(difference(v2, v1), v1)
    rng = np.random.default_rng(5)
    for x, y in rng.uniform(-2, 2, size=(10, 2)):
        assert eval_position(recon, x, y) == pytest.approx(eval_position(v2, x, y), abs=1e-14)
        assert fourier_y(recon, x, y) == pytest.approx(fourier_y(v2, x, y), abs=1e-14)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        difference(GaussianBump(), Gaussian3D())


# ---------------------------------------------------------------------------
# 3D families and the closed-form deformation
# ---------------------------------------------------------------------------


def test_deformation_amplitude_formula():
    # nx = ny = 1, ax = ay = 1, zt = 1: z = 1!1!/((-i)^2 (-i)^2) = 1
    assert deformation_amplitude_3d(1.0, 1.0, 1.0, 1, 1) == pytest.approx(1.0)
    # out-of-range nx = ny = 0 evaluates to -1 but the family rejects it
    assert deformation_amplitude_3d(1.0, 1.0, 1.0, 0, 0) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        RationalDeformation3D(1.0, 1.0, 1.0, 1.0, 1.0, 0, 0)


def test_deformation_3d_value_at_origin_is_amplitude():
    u = construct_deformation_3d(None, alpha=1.0, amplitude_tilde=2.0 - 1.0j, nx=1, ny=1)
    assert eval_position_3d(u, 0.0, 0.0, 0.0) == pytest.approx(u.amplitude)


def test_deformation_3d_closed_form_vs_double_integral():
    # u = exp(2 i a (x+y)) e^{-z^2/2az^2} int int e^{i(x qx + y qy)} f dqx dqy
    # with separable f, the double integral is the product of 1D integrals.
    zt = 0.7 + 0.4j
    u = RationalDeformation3D(zt, alpha=1.0, ax=1.2, ay=0.8, az=1.0, nx=2, ny=1)

    def one_d(n, a, coord):
        return complex_quad(
            lambda q: q**n * np.exp(-a * q) * np.exp(1j * coord * q), 0, 100 / a, limit=400
        )

    rng = np.random.default_rng(17)
    for x, y, z in rng.uniform(-2, 2, size=(20, 3)):
        oracle = (
            zt
            * np.exp(2j * (x + y))
            * math.exp(-(z**2) / 2)
            * one_d(2, 1.2, x)
            * one_d(1, 0.8, y)
        )
        got = eval_position_3d(u, x, y, z)
        assert got == pytest.approx(oracle, rel=1e-8)


def test_fourier_xy_quadrant_support():
    u = RationalDeformation3D(1.0, alpha=1.0, ax=1.0, ay=1.0, az=1.0, nx=1, ny=1)
    assert fourier_xy(u, 1.9, 5.0, 0.0) == 0.0
    assert fourier_xy(u, 5.0, 1.9, 0.0) == 0.0
    assert abs(fourier_xy(u, 3.0, 3.0, 0.0)) > 0.0


def test_fourier_xy_matches_quadrature_gaussian3d():
    v = Gaussian3D(amplitude=0.9 + 0.1j, widths=(0.8, 1.1, 1.0))
    kx, ky, z = 0.7, -0.9, 0.3
    ox = complex_quad(lambda x: np.exp(-1j * kx * x) * math.exp(-(x**2) / (2 * 0.64)), -30, 30)
    oy = complex_quad(lambda y: np.exp(-1j * ky * y) * math.exp(-(y**2) / (2 * 1.21)), -30, 30)
    expected = (0.9 + 0.1j) * ox * oy * math.exp(-(z**2) / 2)
    assert fourier_xy(v, kx, ky, z) == pytest.approx(expected, rel=1e-10)


# ---------------------------------------------------------------------------
# supports, scaling, serialization
# ---------------------------------------------------------------------------


def test_support_is_8_sigma():
    v = GaussianBump(center=(1.0, 0.0), sigma=(0.5, 1.0))
    assert support_x(v) == (1.0 - 4.0, 1.0 + 4.0)
    assert support_x(ZERO_2D) == (0.0, 0.0)


def test_scale_potential_scales_values():
    v = GaussianBump(amplitude=1.0 + 1.0j)
    s = scale_potential(v, -2.0)
    assert eval_position(s, 0.3, 0.4) == pytest.approx(-2.0 * eval_position(v, 0.3, 0.4))


@pytest.mark.parametrize(
    "v",
    [
        GaussianBump(amplitude=1 + 2j, center=(0.1, -0.2), sigma=(0.9, 1.1), beta=0.3),
        DeltaComb((0.5j, 1.0, 0.5j), alpha1=0.8),
        RationalDeformation2D(GaussianProfile(0.1, 1.2), 1.5, 2, 0.9, 0.3 - 0.4j),
        Sum2D((GaussianBump(), RationalDeformation2D())),
        Gaussian3D(amplitude=2.0, widths=(1.0, 2.0, 0.5), center=(0, 0, 0.3)),
        RationalDeformation3D(1.0 - 1.0j, 1.0, 1.0, 2.0, 0.7, 1, 2),
        Tabulated2D(0.0, 0.0, 0.5, 0.5, ((1.0, 2.0), (3.0, 4.0 + 1j))),
    ],
)
def test_json_roundtrip(v):
    blob = json.dumps(to_json(v))
    assert from_json(json.loads(blob)) == v


def test_from_json_rejects_unknown_type():
    with pytest.raises(UnsupportedFamily):
        from_json({"type": "nonsense"})
