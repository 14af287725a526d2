"""First Born approximation in 2D and 3D, used as an independent oracle.

2D prefactor derivation (fixes the constant against the outgoing-wave
normalization psi ~ exp(i k0.r) + sqrt(i/(k r)) exp(i k r) f(theta)):

The scattered wave solves (-lap - k^2) psi_sc = -v psi, so with the
outgoing Green function G(r) = (i/4) H0^(1)(k r) of (-lap - k^2),

    psi_sc(r) = -(i/4) int d^2r' H0^(1)(k |r - r'|) v(r') psi(r').

Replacing psi by the incident plane wave exp(i k0.r) and using
H0^(1)(kR) -> sqrt(2/(pi k R)) exp(i(kR - pi/4)) with |r - r'| ~ r - s.r'
gives

    psi_sc -> -(i/4) sqrt(2/(pi k r)) e^{-i pi/4} e^{ikr} V(k s - k0),

where V(q) = int d^2r e^{-i q.r} v(r) is the full transform.  Matching to
sqrt(i/(kr)) e^{ikr} f with sqrt(i) = e^{i pi/4} leaves

    f_B(theta) = -(1/(2 sqrt(2 pi))) V(k s(theta) - k0),

since (i/4) sqrt(2/pi) e^{-i pi/2} = (1/4) sqrt(2/pi) = 1/(2 sqrt(2 pi)).
The weak-coupling comparison against the transfer-matrix pipeline locks
this constant (the gap must scale linearly with the coupling).

3D is the textbook f_B = -V3(q)/(4 pi); the z-part of V3 is integrated
numerically so the oracle does not share the analytic z-transform with
anything it checks.
"""

from __future__ import annotations

import math

import numpy as np

from .potentials import (
    Potential2D,
    Potential3D,
    full_fourier_2d,
    fourier_xy,
    support_z,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Gauss-Legendre size for the numerical z-transform in 3D.
_Z_QUAD_NODES = 200


def born_2d(v: Potential2D, k: float, theta0: float, thetas, side: str = "left"):
    """First-order amplitude f_B(theta) for a plane wave incident at theta0.

    The incident wave vector has x-component +k cos(theta0) for left
    incidence and -k cos(theta0) for right incidence; theta labels the
    outgoing direction (cos theta, sin theta).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    thetas = np.asarray(thetas, dtype=float)
    sgn = 1.0 if side == "left" else -1.0
    k0x = sgn * k * math.cos(theta0)
    k0y = k * math.sin(theta0)
    qx = k * np.cos(thetas) - k0x
    qy = k * np.sin(thetas) - k0y
    vals = full_fourier_2d(v, qx, qy)
    return -vals / (2.0 * SQRT_2PI)


def born_3d(v: Potential3D, k: float, s0, s) -> complex:
    """f_B = -V3(k(s - s0))/(4 pi) for unit directions s0 (incident), s (out).

    V3 combines the analytic (x, y)-transform with a Gauss-Legendre
    z-quadrature over the declared support.
    """
    s0 = np.asarray(s0, dtype=float)
    s = np.asarray(s, dtype=float)
    for name, u in (("s0", s0), ("s", s)):
        if u.shape != (3,) or abs(np.linalg.norm(u) - 1.0) > 1e-10:
            raise ValueError(f"{name} must be a unit 3-vector")
    q = k * (s - s0)
    v3 = fourier_3d(v, q[0], q[1], q[2])
    return complex(-v3 / (4.0 * math.pi))


def fourier_3d(v: Potential3D, qx: float, qy: float, qz: float) -> complex:
    """Full transform int d^3r exp(-i q.r) v(r), z-part by quadrature."""
    lo, hi = support_z(v)
    if hi <= lo:
        return 0.0 + 0.0j
    x, w = np.polynomial.legendre.leggauss(_Z_QUAD_NODES)
    z = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wz = 0.5 * (hi - lo) * w
    vals = fourier_xy(v, qx, qy, z)
    return complex(np.sum(wz * np.exp(-1j * qz * z) * vals))
