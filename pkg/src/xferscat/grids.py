"""Discretizations of the propagating momentum window.

The window consists of transverse momenta p with |p| < k (an interval in
2D, a disk in 3D).  Quadrature nodes come from Gauss-Legendre in the angle
variable of the substitution p = k sin(phi), which keeps every node
strictly inside the window so the 1/(2 varpi) weight is never singular.

Zero-weight "augmented" nodes are appended for the incidence momentum p0
and for every requested output angle: operators are evaluated there but
those values never feed back into integrals, so delta inputs and pointwise
outputs are exact kernel reads instead of interpolations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GrazingIncidence
from .potentials import DeltaComb

# Incidence angles closer than this to +-pi/2 are rejected.
GRAZING_ANGLE_MARGIN = 1e-3
GRAZING_SIN_LIMIT = 1.0 - 1e-6

# Relative tolerance for merging coincident augmented momenta.
_NODE_MERGE_RTOL = 1e-12


@dataclass(frozen=True)
class MomentumGrid2D:
    """Nodes p_i in (-k, k) with weights w_i and varpi_i = sqrt(k^2 - p_i^2).

    The first ``n_quad`` nodes carry Gauss-Legendre weights; the rest are
    zero-weight evaluation nodes.  ``i_p0`` indexes the incidence node and
    ``theta_index[j]`` the node of the j-th requested output angle.
    """

    k: float
    p: np.ndarray
    w: np.ndarray
    varpi: np.ndarray
    n_quad: int
    i_p0: int
    theta0: float
    thetas: np.ndarray
    theta_index: np.ndarray

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def p0(self) -> float:
        return float(self.p[self.i_p0])

    @property
    def delta_nodes(self) -> tuple[int, ...]:
        """Nodes that may receive delta inputs (carry weight-free columns)."""
        return (self.i_p0,)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_quad": self.n_quad,
            "i_p0": self.i_p0,
            "theta0": self.theta0,
            "nodes": self.p.tolist(),
            "weights": self.w.tolist(),
            "varpi": self.varpi.tolist(),
            "thetas": self.thetas.tolist(),
            "theta_index": self.theta_index.tolist(),
        }


def gauss_legendre_angle(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for phi in (-pi/2, pi/2)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * math.pi * x, 0.5 * math.pi * w


def build_grid_2d(
    k: float,
    n_nodes: int = 64,
    theta0: float = 0.0,
    thetas=(),
) -> MomentumGrid2D:
    """Quadrature plus augmented nodes for one (k, theta0, output angles) task.

    Deterministic for fixed inputs.  Output angles whose transverse momenta
    coincide (theta and pi - theta) share one node.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if n_nodes < 8:
        raise ValueError("need at least 8 quadrature nodes")
    if abs(theta0) >= math.pi / 2 - GRAZING_ANGLE_MARGIN:
        raise GrazingIncidence(f"incidence angle {theta0!r} too close to +-pi/2")
    if abs(math.sin(theta0)) > GRAZING_SIN_LIMIT:
        raise GrazingIncidence(f"sin(theta0) {math.sin(theta0)!r} too close to +-1")

    phi, wphi = gauss_legendre_angle(n_nodes)
    p_quad = k * np.sin(phi)
    w_quad = k * np.cos(phi) * wphi

    thetas = np.asarray(thetas, dtype=float)
    p_nodes = list(p_quad)
    weights = list(w_quad)

    def _augment(p_new: float) -> int:
        for idx in range(n_nodes, len(p_nodes)):
            if abs(p_nodes[idx] - p_new) <= _NODE_MERGE_RTOL * max(k, 1.0):
                return idx
        p_nodes.append(p_new)
        weights.append(0.0)
        return len(p_nodes) - 1

    i_p0 = _augment(k * math.sin(theta0))
    theta_index = np.empty(thetas.size, dtype=int)
    for j, th in enumerate(thetas):
        s = math.sin(th)
        if abs(s) > GRAZING_SIN_LIMIT:
            raise GrazingIncidence(f"output angle {th!r} grazes the window edge")
        theta_index[j] = _augment(k * s)

    p = np.asarray(p_nodes)
    w = np.asarray(weights)
    varpi = np.sqrt(k * k - p * p)
    return MomentumGrid2D(
        k=float(k),
        p=p,
        w=w,
        varpi=varpi,
        n_quad=n_nodes,
        i_p0=i_p0,
        theta0=float(theta0),
        thetas=thetas,
        theta_index=theta_index,
    )


@dataclass(frozen=True)
class CombLattice:
    """Momentum lattice {p0 + n alpha1} truncated to the open window (-k, k)."""

    k: float
    p0: float
    alpha1: float
    orders: np.ndarray
    p: np.ndarray
    varpi: np.ndarray

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def i_zero(self) -> int:
        """Index of the incidence order n = 0."""
        return int(np.nonzero(self.orders == 0)[0][0])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "p0": self.p0,
            "alpha1": self.alpha1,
            "orders": self.orders.tolist(),
            "nodes": self.p.tolist(),
            "varpi": self.varpi.tolist(),
        }


def build_lattice(k: float, p0: float, comb: DeltaComb) -> CombLattice:
    """All diffraction orders n with |p0 + n alpha1| < k, strictly inside."""
    if k <= 0:
        raise ValueError("k must be positive")
    if not abs(p0) < k:
        raise ValueError("incidence momentum must satisfy |p0| < k")
    a1 = comb.alpha1
    n_lo = math.floor((-k - p0) / a1)
    n_hi = math.ceil((k - p0) / a1)
    orders = np.array(
        [n for n in range(n_lo, n_hi + 1) if abs(p0 + n * a1) < k], dtype=int
    )
    p = p0 + orders * a1
    varpi = np.sqrt(k * k - p * p)
    return CombLattice(
        k=float(k), p0=float(p0), alpha1=float(a1), orders=orders, p=p, varpi=varpi
    )


@dataclass(frozen=True)
class DiskGrid3D:
    """Polar product grid on the open disk |p| < k with areal weights."""

    k: float
    px: np.ndarray
    py: np.ndarray
    w: np.ndarray
    varpi: np.ndarray
    n_radial: int
    n_angular: int

    @property
    def n(self) -> int:
        return self.px.size

    @property
    def delta_nodes(self) -> tuple[int, ...]:
        return ()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_radial": self.n_radial,
            "n_angular": self.n_angular,
            "px": self.px.tolist(),
            "py": self.py.tolist(),
            "weights": self.w.tolist(),
            "varpi": self.varpi.tolist(),
        }


def build_disk_grid(k: float, n_radial: int = 16, n_angular: int = 24) -> DiskGrid3D:
    """Radius r = k sin(phi) with Gauss-Legendre in phi, uniform angles.

    Weights integrate area: sum w = pi k^2 up to the quadrature error of
    the smooth phi-integrand.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if n_radial < 4 or n_angular < 4:
        raise ValueError("grid too coarse")
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    phi = 0.25 * math.pi * (x + 1.0)  # phi in (0, pi/2)
    wphi = 0.25 * math.pi * wx
    r = k * np.sin(phi)
    # d^2p = r dr dchi, dr = k cos(phi) dphi
    wr = k * np.sin(phi) * k * np.cos(phi) * wphi
    chi = 2.0 * math.pi * np.arange(n_angular) / n_angular
    wchi = 2.0 * math.pi / n_angular
    px = np.outer(r, np.cos(chi)).ravel()
    py = np.outer(r, np.sin(chi)).ravel()
    w = np.outer(wr * wchi, np.ones(n_angular)).ravel()
    varpi = np.sqrt(k * k - px * px - py * py)
    return DiskGrid3D(
        k=float(k),
        px=px,
        py=py,
        w=w,
        varpi=varpi,
        n_radial=n_radial,
        n_angular=n_angular,
    )
