"""Scattering amplitudes and diffraction orders from a transfer matrix.

The incident delta never gets discretized: identity parts of the blocks
are subtracted symbolically, the remaining smooth kernel columns are
solved against M22 on the quadrature nodes, and the results are read at
the zero-weight output-angle nodes exactly (Nystrom extension through the
solve, no interpolation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch
from .dynamics2d import TransferMatrix2D, TransferMatrixComb
from .grids import MomentumGrid2D
from .operators import op_solve

TWO_PI = 2.0 * math.pi

# Output angles closer than this to grazing are rejected.
GRAZING_COS_LIMIT = 1e-6

# Default plotting grid excludes a wider band around +-pi/2.
DEFAULT_THETA_BAND = 1e-3


def default_theta_grid(n: int = 181) -> np.ndarray:
    """n angles uniform in the open interval (-pi, pi), grazing band removed."""
    thetas = -math.pi + (np.arange(n) + 1.0) * (2.0 * math.pi / (n + 1.0))
    return thetas[np.abs(np.cos(thetas)) >= DEFAULT_THETA_BAND]


@dataclass(frozen=True)
class ScatteringTask:
    """One incidence configuration and its output angles (radians)."""

    k: float
    side: str = "left"
    theta0: float = 0.0
    thetas: np.ndarray = field(default_factory=default_theta_grid)

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if abs(self.theta0) >= math.pi / 2 - 1e-3:
            raise ValueError("incidence angle too close to grazing")
        thetas = np.asarray(self.thetas, dtype=float)
        if np.any(np.abs(np.cos(thetas)) < GRAZING_COS_LIMIT):
            raise ValueError("output angles must avoid |cos theta| < 1e-6")
        object.__setattr__(self, "thetas", thetas)

    @property
    def p0(self) -> float:
        return self.k * math.sin(self.theta0)


@dataclass(frozen=True)
class AmplitudeTable:
    """Amplitude rows for one (k, theta0, side) task."""

    k: float
    theta0: float
    side: str
    thetas: np.ndarray
    f: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def abs_f2(self) -> np.ndarray:
        return np.abs(self.f) ** 2

    def rows(self):
        t0_deg = math.degrees(self.theta0)
        for th, fv in zip(self.thetas, self.f):
            yield (
                self.k,
                t0_deg,
                self.side,
                math.degrees(th),
                fv.real,
                fv.imag,
                abs(fv) ** 2,
            )


@dataclass(frozen=True)
class OrderTable:
    """Reflection/transmission coefficients per diffraction order."""

    k: float
    theta0: float
    orders: np.ndarray
    sin_thetas: np.ndarray
    r: np.ndarray
    t: np.ndarray
    provenance: dict = field(default_factory=dict)

    def rows(self):
        for n, s, rv, tv in zip(self.orders, self.sin_thetas, self.r, self.t):
            yield (int(n), s, rv.real, rv.imag, tv.real, tv.imag)


def _check_task(tm: TransferMatrix2D, task: ScatteringTask) -> MomentumGrid2D:
    g = tm.grid
    if g.k != task.k:
        raise GridMismatch(f"grid k={g.k} but task k={task.k}")
    if g.theta0 != task.theta0:
        raise GridMismatch("grid was built for a different incidence angle")
    if g.thetas.size != task.thetas.size or not np.array_equal(g.thetas, task.thetas):
        raise GridMismatch("grid was built for different output angles")
    return g


def t_coefficients(tm: TransferMatrix2D, task: ScatteringTask):
    """T_- and T_+ as smooth node functions, evaluated on all grid nodes.

    Left incidence:
        xi  = M22^{-1} M21 delta_p0,     T- = -2 pi xi,
        T+  =  2 pi [ (M11 - 1) delta_p0 - M12 xi ].
    Right incidence:
        eta = M22^{-1} K22 delta_p0 (K22 the pure kernel of M22),
        T- = -2 pi eta,   T+ = 2 pi [ M12 delta_p0 - M12 eta ].
    The identity parts are subtracted exactly, so every right-hand side is
    a smooth kernel column and no delta is ever discretized.
    """
    g = _check_task(tm, task)
    i0 = g.i_p0
    m11 = tm.block(1, 1)
    m12 = tm.block(1, 2)
    m21 = tm.block(2, 1)
    m22 = tm.block(2, 2)
    if task.side == "left":
        _, rhs = m21.apply_to_delta(i0)  # pure kernel column (c21 = 0)
        xi = op_solve(m22, rhs)
        t_minus = -TWO_PI * xi
        _, col11 = m11.apply_to_delta(i0)  # (M11 - 1) delta: kernel column only
        t_plus = TWO_PI * (col11 - m12.kernel_w @ xi)
        return t_minus, t_plus
    _, col22 = m22.apply_to_delta(i0)
    eta = op_solve(m22, col22)
    t_minus = -TWO_PI * eta
    _, col12 = m12.apply_to_delta(i0)
    t_plus = TWO_PI * (col12 - m12.kernel_w @ eta)
    return t_minus, t_plus


def amplitude(tm: TransferMatrix2D, task: ScatteringTask) -> AmplitudeTable:
    """f(theta) = -(i k |cos theta| / sqrt(2 pi)) T_{-/+}(k sin theta).

    T_- feeds the backward half-plane (cos theta < 0), T_+ the forward one;
    values are read at the augmented angle nodes exactly.
    """
    g = _check_task(tm, task)
    t_minus, t_plus = t_coefficients(tm, task)
    idx = g.theta_index
    cos_t = np.cos(task.thetas)
    pick = np.where(cos_t < 0.0, t_minus[idx], t_plus[idx])
    f = -1j * task.k * np.abs(cos_t) / math.sqrt(TWO_PI) * pick
    prov = {
        "n_nodes": g.n_quad,
        "slices": tm.slices,
        "conv_estimate": tm.conv_estimate,
        "det_estimate": [tm.det_estimate.real, tm.det_estimate.imag],
    }
    return AmplitudeTable(task.k, task.theta0, task.side, task.thetas.copy(), f, prov)


def diffraction_orders(tmc: TransferMatrixComb, theta0: float | None = None) -> OrderTable:
    """Reflection and transmission coefficients over the order lattice.

    r = -(M22^{-1} M21) e_0 and t = (M11 - M12 M22^{-1} M21) e_0 where e_0
    marks the incidence order n = 0.  The comb's 2 pi delta normalizations
    cancel in these ratios, so the coefficients are reported raw.
    """
    from .errors import SingularOperator

    lat = tmc.lattice
    m11, m12, m21, m22 = tmc.blocks()
    e0 = np.zeros(lat.n, dtype=complex)
    e0[lat.i_zero] = 1.0
    cond = np.linalg.cond(m22)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularOperator(f"M22 condition {cond:.3e} on the comb lattice")
    xi = np.linalg.solve(m22, m21 @ e0)
    r = -xi
    t = m11 @ e0 - m12 @ xi
    if theta0 is None:
        theta0 = math.asin(lat.p0 / lat.k)
    prov = {"det_estimate": [tmc.det_estimate.real, tmc.det_estimate.imag]}
    return OrderTable(
        k=lat.k,
        theta0=theta0,
        orders=lat.orders.copy(),
        sin_thetas=(lat.p / lat.k).copy(),
        r=r,
        t=t,
        provenance=prov,
    )


def solve_amplitude(v, task: ScatteringTask, options=None, x_range=None):
    """Build the grid and transfer matrix for a task and extract amplitudes.

    Returns (AmplitudeTable, TransferMatrix2D).  Passing an explicit
    x_range lets equivalence runs share one slicing between two potentials.
    """
    from .config import EngineOptions
    from .dynamics2d import transfer_matrix
    from .grids import build_grid_2d

    opts = options if options is not None else EngineOptions()
    grid = build_grid_2d(task.k, opts.n_nodes, task.theta0, task.thetas)
    tm = transfer_matrix(
        v,
        grid,
        x_range=x_range,
        slices=opts.slices,
        tol=opts.tol,
        max_doublings=opts.max_doublings,
        extrapolate=opts.extrapolate,
    )
    return amplitude(tm, task), tm


def flux_balance(table: OrderTable) -> float:
    """sum_n (|r_n|^2 + |t_n|^2) varpi_n / varpi_0 over propagating orders.

    Equals 1 for real potentials (flux conservation); a diagnostic for
    complex ones.
    """
    k = table.k
    p = table.sin_thetas * k
    varpi = np.sqrt(k * k - p * p)
    varpi0 = varpi[np.nonzero(table.orders == 0)[0][0]]
    return float(
        np.sum((np.abs(table.r) ** 2 + np.abs(table.t) ** 2) * varpi / varpi0)
    )
