"""Potential families with exact transverse Fourier transforms.

Every 2D family knows its partial Fourier transform along y,

    v~(x, Ky) = integral dy exp(-i Ky y) v(x, y),

and every 3D family its transform along (x, y).  The transform support is
what decides invisibility and equivalence below a critical wavenumber, so
the transforms here are analytic, not numerical.  Families whose transform
vanishes for Ky < 2*alpha (or Kx < 2*alpha, Ky < 2*alpha in 3D) are built
by the ``construct_deformation_*`` helpers.

Delta combs are distributional in both x and Ky; they are routed to the
lattice backend and refuse pointwise/Fourier evaluation here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    CombRequiresLattice,
    DimensionMismatch,
    DistributionalVariant,
    UnsupportedFamily,
)

# Gaussian envelopes are treated as compactly supported beyond this many
# sigmas (tail < 1e-14 of the peak); dynamics integrates only over support.
SUPPORT_SIGMAS = 8.0

# Verdict threshold for support checks, relative to the allowed-region scale.
SUPPORT_ZERO_RTOL = 1e-10

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianProfile:
    """Unit-peak Gaussian envelope exp(-(t - center)^2 / (2 sigma^2))."""

    center: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-((t - self.center) ** 2) / (2.0 * self.sigma**2))

    def fourier(self, q):
        """Fourier transform integral dt exp(-i q t) of the profile."""
        q = np.asarray(q, dtype=float)
        return (
            self.sigma
            * SQRT_2PI
            * np.exp(-0.5 * (self.sigma * q) ** 2)
            * np.exp(-1j * q * self.center)
        )

    @property
    def support(self) -> tuple[float, float]:
        half = SUPPORT_SIGMAS * self.sigma
        return (self.center - half, self.center + half)


@dataclass(frozen=True)
class GaussianBump:
    """Separable Gaussian potential z * gx(x) * gy(y) * exp(i beta y)."""

    amplitude: complex = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    sigma: tuple[float, float] = (1.0, 1.0)
    beta: float = 0.0

    def __post_init__(self):
        if self.sigma[0] <= 0 or self.sigma[1] <= 0:
            raise ValueError("widths must be positive")


@dataclass(frozen=True)
class DeltaComb:
    """delta(x) * sum_n z_n exp(i n alpha1 y), n = -N..N.

    ``coefficients`` lists z_n in increasing n; the length must be odd so
    the index range is symmetric about n = 0.
    """

    coefficients: tuple[complex, ...]
    alpha1: float

    def __post_init__(self):
        if len(self.coefficients) % 2 != 1:
            raise ValueError("coefficient list must have odd length (n = -N..N)")
        if self.alpha1 <= 0:
            raise ValueError("lattice frequency alpha1 must be positive")
        object.__setattr__(self, "coefficients", tuple(complex(z) for z in self.coefficients))

    @property
    def order(self) -> int:
        """Truncation order N."""
        return (len(self.coefficients) - 1) // 2

    def coefficient(self, n: int) -> complex:
        """z_n, zero outside the truncation range."""
        if abs(n) > self.order:
            return 0.0 + 0.0j
        return self.coefficients[n + self.order]

    def y_profile(self, y):
        """The smooth transverse factor sum_n z_n exp(i n alpha1 y)."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.shape(y), dtype=complex)
        for n in range(-self.order, self.order + 1):
            out = out + self.coefficient(n) * np.exp(1j * n * self.alpha1 * y)
        return out


@dataclass(frozen=True)
class RationalDeformation2D:
    """One-sided deformation g(x) * z * m! * exp(2i alpha y) / (a - i y)^(m+1).

    Its y-Fourier transform is g(x) * 2 pi z (Ky - 2 alpha)^m exp(-a (Ky - 2 alpha))
    for Ky >= 2 alpha and exactly zero below, which is the one-sidedness that
    makes it invisible for k <= alpha.
    """

    envelope: GaussianProfile = field(default_factory=GaussianProfile)
    alpha: float = 1.0
    m: int = 0
    a: float = 1.0
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.a <= 0:
            raise ValueError("decay length a must be positive")
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError("order m must be a nonnegative integer")


@dataclass(frozen=True)
class Tabulated2D:
    """Potential sampled on a regular (x, y) grid; Fourier via trapezoid DFT.

    Fallback family only: the DFT aliases outside the declared spacing and
    that is the caller's responsibility.
    """

    x0: float
    y0: float
    dx: float
    dy: float
    values: tuple  # nested tuple, row index x, column index y

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != 2:
            raise ValueError("values must be a 2D array")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("spacings must be positive")
        object.__setattr__(self, "values", tuple(map(tuple, arr.tolist())))

    def _array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=complex)

    def x_grid(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    def y_grid(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(len(self.values[0]))


@dataclass(frozen=True)
class Sum2D:
    """Pointwise sum of 2D potentials."""

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))


Potential2D = Union[GaussianBump, DeltaComb, RationalDeformation2D, Tabulated2D, Sum2D]

ZERO_2D = Sum2D(members=())


# ---------------------------------------------------------------------------
# 3D families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian3D:
    """Separable Gaussian z * prod_j exp(-(r_j - c_j)^2 / (2 a_j^2))."""

    amplitude: complex = 1.0
    widths: tuple[float, float, float] = (1.0, 1.0, 1.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.widths) <= 0:
            raise ValueError("widths must be positive")


@dataclass(frozen=True)
class RationalDeformation3D:
    """Closed-form deformation with quadrant-supported (x, y) transform.

    u(x,y,z) = z * exp(2i alpha (x+y)) * exp(-z^2/(2 az^2))
               / ((x/ax + i)^(nx+1) (y/ay + i)^(ny+1)),

    with z fixed by the tilde amplitude:
    z = nx! ny! zt / ((-i ax)^(nx+1) (-i ay)^(ny+1)).
    Its (x, y)-Fourier transform vanishes unless Kx >= 2 alpha and
    Ky >= 2 alpha simultaneously.
    """

    amplitude_tilde: complex
    alpha: float
    ax: float
    ay: float
    az: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.alpha <= 0 or min(self.ax, self.ay, self.az) <= 0:
            raise ValueError("alpha and decay lengths must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(
                "nx and ny must be positive integers; the closed form is only "
                "established for nx, ny >= 1"
            )

    @property
    def amplitude(self) -> complex:
        return deformation_amplitude_3d(
            self.amplitude_tilde, self.ax, self.ay, self.nx, self.ny
        )


@dataclass(frozen=True)
class Sum3D:
    """Pointwise sum of 3D potentials."""

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))


Potential3D = Union[Gaussian3D, RationalDeformation3D, Sum3D]

ZERO_3D = Sum3D(members=())


def deformation_amplitude_3d(amplitude_tilde, ax, ay, nx, ny) -> complex:
    """Map the tilde amplitude to the closed-form one.

    z = nx! ny! zt / ((-i ax)^(nx+1) (-i ay)^(ny+1)).  Evaluates for any
    nonnegative nx, ny; the constructor itself insists on nx, ny >= 1.
    """
    num = math.factorial(nx) * math.factorial(ny) * complex(amplitude_tilde)
    den = (-1j * ax) ** (nx + 1) * (-1j * ay) ** (ny + 1)
    return num / den


def is_potential_2d(v) -> bool:
    return isinstance(v, (GaussianBump, DeltaComb, RationalDeformation2D, Tabulated2D, Sum2D))


def is_potential_3d(v) -> bool:
    return isinstance(v, (Gaussian3D, RationalDeformation3D, Sum3D))


# ---------------------------------------------------------------------------
# Pointwise evaluation
# ---------------------------------------------------------------------------


def eval_position(v: Potential2D, x, y):
    """Evaluate v(x, y).  Raises DistributionalVariant for delta combs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(v, GaussianBump):
        gx = np.exp(-((x - v.center[0]) ** 2) / (2.0 * v.sigma[0] ** 2))
        gy = np.exp(-((y - v.center[1]) ** 2) / (2.0 * v.sigma[1] ** 2))
        return v.amplitude * gx * gy * np.exp(1j * v.beta * y)
    if isinstance(v, RationalDeformation2D):
        pole = (v.a - 1j * y) ** (v.m + 1)
        return (
            v.envelope(x)
            * v.amplitude
            * math.factorial(v.m)
            * np.exp(2j * v.alpha * y)
            / pole
        )
    if isinstance(v, Sum2D):
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for member in v.members:
            out = out + eval_position(member, x, y)
        return out if out.shape else complex(out)
    if isinstance(v, Tabulated2D):
        return _tabulated_interp(v, x, y)
    if isinstance(v, DeltaComb):
        raise DistributionalVariant(
            "delta comb is distributional in x; use DeltaComb.y_profile for the "
            "transverse factor"
        )
    raise UnsupportedFamily(f"not a 2D potential: {type(v).__name__}")


def _tabulated_interp(v: Tabulated2D, x, y):
    arr = v._array()
    xg, yg = v.x_grid(), v.y_grid()
    fx = np.clip((np.asarray(x) - v.x0) / v.dx, 0, len(xg) - 1)
    fy = np.clip((np.asarray(y) - v.y0) / v.dy, 0, len(yg) - 1)
    ix = np.clip(np.floor(fx).astype(int), 0, len(xg) - 2) if len(xg) > 1 else 0
    iy = np.clip(np.floor(fy).astype(int), 0, len(yg) - 2) if len(yg) > 1 else 0
    tx = fx - ix
    ty = fy - iy
    out = (
        arr[ix, iy] * (1 - tx) * (1 - ty)
        + arr[ix + 1, iy] * tx * (1 - ty)
        + arr[ix, iy + 1] * (1 - tx) * ty
        + arr[ix + 1, iy + 1] * tx * ty
    )
    inside = (
        (np.asarray(x) >= xg[0])
        & (np.asarray(x) <= xg[-1])
        & (np.asarray(y) >= yg[0])
        & (np.asarray(y) <= yg[-1])
    )
    return np.where(inside, out, 0.0)


def eval_position_3d(v: Potential3D, x, y, z):
    """Evaluate v(x, y, z)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if isinstance(v, Gaussian3D):
        cx, cy, cz = v.center
        ax, ay, az = v.widths
        return v.amplitude * np.exp(
            -((x - cx) ** 2) / (2 * ax**2)
            - ((y - cy) ** 2) / (2 * ay**2)
            - ((z - cz) ** 2) / (2 * az**2)
        ) + 0j
    if isinstance(v, RationalDeformation3D):
        px = (x / v.ax + 1j) ** (v.nx + 1)
        py = (y / v.ay + 1j) ** (v.ny + 1)
        return (
            v.amplitude
            * np.exp(2j * v.alpha * (x + y))
            * np.exp(-(z**2) / (2 * v.az**2))
            / (px * py)
        )
    if isinstance(v, Sum3D):
        out = np.zeros(np.broadcast(x, y, z).shape, dtype=complex)
        for member in v.members:
            out = out + eval_position_3d(member, x, y, z)
        return out if out.shape else complex(out)
    raise UnsupportedFamily(f"not a 3D potential: {type(v).__name__}")


# ---------------------------------------------------------------------------
# Transverse Fourier transforms
# ---------------------------------------------------------------------------


def fourier_y(v: Potential2D, x, ky):
    """Partial transform v~(x, Ky) = integral dy exp(-i Ky y) v(x, y).

    Analytic per family.  Delta combs raise CombRequiresLattice: their
    transform is a Dirac comb handled only by the lattice backend.
    """
    ky = np.asarray(ky, dtype=float)
    if isinstance(v, GaussianBump):
        sx, sy = v.sigma
        x0, y0 = v.center
        envx = np.exp(-((np.asarray(x, dtype=float) - x0) ** 2) / (2 * sx**2))
        shift = ky - v.beta
        return (
            v.amplitude
            * envx
            * sy
            * SQRT_2PI
            * np.exp(-0.5 * (sy * shift) ** 2)
            * np.exp(-1j * shift * y0)
        )
    if isinstance(v, RationalDeformation2D):
        q = ky - 2.0 * v.alpha
        qa = np.where(q >= 0.0, q, 0.0)
        onesided = np.where(q >= 0.0, qa**v.m * np.exp(-v.a * qa), 0.0)
        return v.envelope(np.asarray(x, dtype=float)) * 2.0 * math.pi * v.amplitude * onesided + 0j
    if isinstance(v, Sum2D):
        out = np.zeros(np.broadcast(np.asarray(x, dtype=float), ky).shape, dtype=complex)
        for member in v.members:
            out = out + fourier_y(member, x, ky)
        return out if out.shape else complex(out)
    if isinstance(v, Tabulated2D):
        yg = v.y_grid()
        xb, kyb = np.broadcast_arrays(np.asarray(x, dtype=float), ky)
        vals = np.asarray(_tabulated_interp(v, xb[..., None], yg), dtype=complex)
        phases = np.exp(-1j * kyb[..., None] * yg)
        out = np.trapezoid(phases * vals, yg, axis=-1)
        return out if out.shape else complex(out)
    if isinstance(v, DeltaComb):
        raise CombRequiresLattice(
            "delta comb transform is a Dirac comb; build a CombLattice instead"
        )
    raise UnsupportedFamily(f"not a 2D potential: {type(v).__name__}")


def fourier_xy(v: Potential3D, kx, ky, z):
    """Transform of a 3D potential with respect to x and y at height z."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    z = np.asarray(z, dtype=float)
    if isinstance(v, Gaussian3D):
        ax, ay, az = v.widths
        cx, cy, cz = v.center
        return (
            v.amplitude
            * (2 * math.pi * ax * ay)
            * np.exp(-0.5 * (ax * kx) ** 2 - 0.5 * (ay * ky) ** 2)
            * np.exp(-1j * (kx * cx + ky * cy))
            * np.exp(-((z - cz) ** 2) / (2 * az**2))
        )
    if isinstance(v, RationalDeformation3D):
        qx = kx - 2.0 * v.alpha
        qy = ky - 2.0 * v.alpha
        qxa = np.where(qx >= 0.0, qx, 0.0)
        qya = np.where(qy >= 0.0, qy, 0.0)
        fx = np.where(qx >= 0.0, qxa**v.nx * np.exp(-v.ax * qxa), 0.0)
        fy = np.where(qy >= 0.0, qya**v.ny * np.exp(-v.ay * qya), 0.0)
        return (
            (2 * math.pi) ** 2
            * v.amplitude_tilde
            * fx
            * fy
            * np.exp(-(z**2) / (2 * v.az**2))
            + 0j
        )
    if isinstance(v, Sum3D):
        out = np.zeros(np.broadcast(kx, ky, z).shape, dtype=complex)
        for member in v.members:
            out = out + fourier_xy(member, kx, ky, z)
        return out if out.shape else complex(out)
    raise UnsupportedFamily(f"not a 3D potential: {type(v).__name__}")


def full_fourier_2d(v: Potential2D, qx, qy):
    """Full 2D transform integral dx dy exp(-i(qx x + qy y)) v(x, y).

    Available analytically for the smooth families; this is what the first
    Born approximation consumes.
    """
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    if isinstance(v, GaussianBump):
        sx, sy = v.sigma
        x0, y0 = v.center
        shift = qy - v.beta
        return (
            v.amplitude
            * sx
            * SQRT_2PI
            * np.exp(-0.5 * (sx * qx) ** 2)
            * np.exp(-1j * qx * x0)
            * sy
            * SQRT_2PI
            * np.exp(-0.5 * (sy * shift) ** 2)
            * np.exp(-1j * shift * y0)
        )
    if isinstance(v, RationalDeformation2D):
        q = qy - 2.0 * v.alpha
        qa = np.where(q >= 0.0, q, 0.0)
        onesided = np.where(q >= 0.0, qa**v.m * np.exp(-v.a * qa), 0.0)
        return v.envelope.fourier(qx) * 2.0 * math.pi * v.amplitude * onesided
    if isinstance(v, Sum2D):
        out = np.zeros(np.broadcast(qx, qy).shape, dtype=complex)
        for member in v.members:
            out = out + full_fourier_2d(member, qx, qy)
        return out if out.shape else complex(out)
    raise UnsupportedFamily(
        f"full 2D Fourier transform not available for {type(v).__name__}"
    )


# ---------------------------------------------------------------------------
# Separable factorization used by the dynamics kernels
# ---------------------------------------------------------------------------


def fourier_y_factors(v: Potential2D):
    """Decompose v~(x, Ky) = sum_t env_t(x) * kfun_t(Ky) when possible.

    Returns a list of (env, kfun) callables, or None for families that are
    not separable (Tabulated2D).  The dynamics uses this to hoist the
    Ky-dependent kernel matrices out of the slice loop.
    """
    if isinstance(v, GaussianBump):
        sx, sy = v.sigma
        x0, y0 = v.center
        amp = v.amplitude

        def env(x, sx=sx, x0=x0, amp=amp):
            return amp * np.exp(-((np.asarray(x, dtype=float) - x0) ** 2) / (2 * sx**2))

        def kfun(ky, sy=sy, beta=v.beta, y0=y0):
            shift = np.asarray(ky, dtype=float) - beta
            return sy * SQRT_2PI * np.exp(-0.5 * (sy * shift) ** 2) * np.exp(-1j * shift * y0)

        return [(env, kfun)]
    if isinstance(v, RationalDeformation2D):

        def env(x, profile=v.envelope):
            return profile(x) + 0j

        def kfun(ky, alpha=v.alpha, m=v.m, a=v.a, amp=v.amplitude):
            q = np.asarray(ky, dtype=float) - 2.0 * alpha
            mask = q >= 0.0
            qa = np.where(mask, q, 0.0)
            return 2.0 * math.pi * amp * np.where(mask, qa**m * np.exp(-a * qa), 0.0) + 0j

        return [(env, kfun)]
    if isinstance(v, Sum2D):
        terms = []
        for member in v.members:
            sub = fourier_y_factors(member)
            if sub is None:
                return None
            terms.extend(sub)
        return terms
    if isinstance(v, DeltaComb):
        raise CombRequiresLattice("delta comb belongs to the lattice backend")
    return None


def fourier_xy_factors(v: Potential3D):
    """3D analog of fourier_y_factors: v~(Kx, Ky, z) = sum env_t(z) * kfun_t(Kx, Ky)."""
    if isinstance(v, Gaussian3D):
        ax, ay, az = v.widths
        cx, cy, cz = v.center
        amp = v.amplitude

        def env(z, az=az, cz=cz, amp=amp):
            return amp * np.exp(-((np.asarray(z, dtype=float) - cz) ** 2) / (2 * az**2))

        def kfun(kx, ky, ax=ax, ay=ay, cx=cx, cy=cy):
            kx = np.asarray(kx, dtype=float)
            ky = np.asarray(ky, dtype=float)
            return (
                (2 * math.pi * ax * ay)
                * np.exp(-0.5 * (ax * kx) ** 2 - 0.5 * (ay * ky) ** 2)
                * np.exp(-1j * (kx * cx + ky * cy))
            )

        return [(env, kfun)]
    if isinstance(v, RationalDeformation3D):

        def env(z, az=v.az):
            return np.exp(-(np.asarray(z, dtype=float) ** 2) / (2 * az**2)) + 0j

        def kfun(kx, ky, alpha=v.alpha, nx=v.nx, ny=v.ny, ax=v.ax, ay=v.ay, zt=v.amplitude_tilde):
            qx = np.asarray(kx, dtype=float) - 2.0 * alpha
            qy = np.asarray(ky, dtype=float) - 2.0 * alpha
            mx = qx >= 0.0
            my = qy >= 0.0
            qxa = np.where(mx, qx, 0.0)
            qya = np.where(my, qy, 0.0)
            fx = np.where(mx, qxa**nx * np.exp(-ax * qxa), 0.0)
            fy = np.where(my, qya**ny * np.exp(-ay * qya), 0.0)
            return (2 * math.pi) ** 2 * zt * fx * fy + 0j

        return [(env, kfun)]
    if isinstance(v, Sum3D):
        terms = []
        for member in v.members:
            sub = fourier_xy_factors(member)
            if sub is None:
                return None
            terms.extend(sub)
        return terms
    return None


# ---------------------------------------------------------------------------
# Supports
# ---------------------------------------------------------------------------


def support_x(v: Potential2D) -> tuple[float, float]:
    """Finite x-interval outside which the potential is treated as zero."""
    if isinstance(v, GaussianBump):
        half = SUPPORT_SIGMAS * v.sigma[0]
        return (v.center[0] - half, v.center[0] + half)
    if isinstance(v, RationalDeformation2D):
        return v.envelope.support
    if isinstance(v, DeltaComb):
        return (0.0, 0.0)
    if isinstance(v, Tabulated2D):
        xg = v.x_grid()
        return (float(xg[0]), float(xg[-1]))
    if isinstance(v, Sum2D):
        if not v.members:
            return (0.0, 0.0)
        los, his = zip(*(support_x(m) for m in v.members))
        return (min(los), max(his))
    raise UnsupportedFamily(f"not a 2D potential: {type(v).__name__}")


def support_z(v: Potential3D) -> tuple[float, float]:
    """Finite z-interval outside which the potential is treated as zero."""
    if isinstance(v, Gaussian3D):
        half = SUPPORT_SIGMAS * v.widths[2]
        return (v.center[2] - half, v.center[2] + half)
    if isinstance(v, RationalDeformation3D):
        half = SUPPORT_SIGMAS * v.az
        return (-half, half)
    if isinstance(v, Sum3D):
        if not v.members:
            return (0.0, 0.0)
        los, his = zip(*(support_z(m) for m in v.members))
        return (min(los), max(his))
    raise UnsupportedFamily(f"not a 3D potential: {type(v).__name__}")


# ---------------------------------------------------------------------------
# Algebra: scaling, sums, differences, deformations
# ---------------------------------------------------------------------------


def scale_potential(v, factor: complex):
    """Potential scaled by a complex factor (amplitudes rescaled)."""
    factor = complex(factor)
    if isinstance(v, GaussianBump):
        return GaussianBump(v.amplitude * factor, v.center, v.sigma, v.beta)
    if isinstance(v, RationalDeformation2D):
        return RationalDeformation2D(v.envelope, v.alpha, v.m, v.a, v.amplitude * factor)
    if isinstance(v, DeltaComb):
        return DeltaComb(tuple(z * factor for z in v.coefficients), v.alpha1)
    if isinstance(v, Tabulated2D):
        vals = (np.asarray(v.values, dtype=complex) * factor).tolist()
        return Tabulated2D(v.x0, v.y0, v.dx, v.dy, tuple(map(tuple, vals)))
    if isinstance(v, Sum2D):
        return Sum2D(tuple(scale_potential(m, factor) for m in v.members))
    if isinstance(v, Gaussian3D):
        return Gaussian3D(v.amplitude * factor, v.widths, v.center)
    if isinstance(v, RationalDeformation3D):
        return RationalDeformation3D(
            v.amplitude_tilde * factor, v.alpha, v.ax, v.ay, v.az, v.nx, v.ny
        )
    if isinstance(v, Sum3D):
        return Sum3D(tuple(scale_potential(m, factor) for m in v.members))
    raise UnsupportedFamily(f"cannot scale {type(v).__name__}")


def add_potentials(*vs):
    """Sum of potentials of one dimensionality."""
    if not vs:
        raise ValueError("need at least one potential")
    if all(is_potential_2d(v) for v in vs):
        members = []
        for v in vs:
            members.extend(v.members if isinstance(v, Sum2D) else (v,))
        return Sum2D(tuple(members))
    if all(is_potential_3d(v) for v in vs):
        members = []
        for v in vs:
            members.extend(v.members if isinstance(v, Sum3D) else (v,))
        return Sum3D(tuple(members))
    raise DimensionMismatch("cannot mix 2D and 3D potentials")


def difference(v2, v1):
    """The potential v2 - v1 (the object whose invisibility makes them equivalent)."""
    both_2d = is_potential_2d(v2) and is_potential_2d(v1)
    both_3d = is_potential_3d(v2) and is_potential_3d(v1)
    if not (both_2d or both_3d):
        raise DimensionMismatch("difference needs two potentials of equal dimension")
    return add_potentials(v2, scale_potential(v1, -1.0))


def as_single_comb(v) -> DeltaComb | None:
    """Collapse a comb or a sum of combs on one lattice to a single DeltaComb."""
    if isinstance(v, DeltaComb):
        return v
    if isinstance(v, Sum2D):
        combs = []
        for m in v.members:
            c = as_single_comb(m)
            if c is None:
                return None
            combs.append(c)
        if not combs:
            return None
        alpha1 = combs[0].alpha1
        if any(c.alpha1 != alpha1 for c in combs):
            return None
        order = max(c.order for c in combs)
        coeffs = [
            sum(c.coefficient(n) for c in combs) for n in range(-order, order + 1)
        ]
        return DeltaComb(tuple(coeffs), alpha1)
    return None


def construct_deformation_2d(
    base: Potential2D | None,
    alpha: float,
    m: int = 0,
    a: float = 1.0,
    amplitude: complex = 1.0,
    envelope: GaussianProfile | None = None,
) -> Potential2D:
    """Attach a one-sided rational deformation, preserving all scattering at k <= alpha.

    The added piece is g(x) exp(2i alpha y) * integral_0^inf dq exp(i y q) f(q)
    with f(q) = amplitude * q^m exp(-a q), evaluated in closed form.
    """
    u = RationalDeformation2D(
        envelope=envelope if envelope is not None else GaussianProfile(),
        alpha=float(alpha),
        m=int(m),
        a=float(a),
        amplitude=complex(amplitude),
    )
    if base is None:
        return u
    if not is_potential_2d(base):
        raise DimensionMismatch("base of a 2D deformation must be a 2D potential")
    return add_potentials(base, u)


def construct_deformation_3d(
    base: Potential3D | None,
    alpha: float,
    amplitude_tilde: complex = 1.0,
    ax: float = 1.0,
    ay: float = 1.0,
    az: float = 1.0,
    nx: int = 1,
    ny: int = 1,
) -> Potential3D:
    """3D analog of construct_deformation_2d, using the closed-form kernel."""
    u = RationalDeformation3D(
        amplitude_tilde=complex(amplitude_tilde),
        alpha=float(alpha),
        ax=float(ax),
        ay=float(ay),
        az=float(az),
        nx=int(nx),
        ny=int(ny),
    )
    if base is None:
        return u
    if not is_potential_3d(base):
        raise DimensionMismatch("base of a 3D deformation must be a 3D potential")
    return add_potentials(base, u)


# ---------------------------------------------------------------------------
# One-sided support verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportReport:
    """Verdict of a one-sided-support check.

    The forbidden region is sampled strictly inside its interior: the
    sufficient conditions constrain the transform as an integral kernel,
    so single boundary points carry no weight.
    """

    passed: bool
    alpha: float
    max_forbidden: float
    scale: float
    threshold: float
    support: tuple[float, float]
    n_samples: int
    exact: bool = False

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "alpha": self.alpha,
            "max_forbidden": self.max_forbidden,
            "scale": self.scale,
            "threshold": self.threshold,
            "support": list(self.support),
            "n_samples": self.n_samples,
            "exact": self.exact,
        }


def check_onesided_support(
    v,
    alpha: float,
    n_axis: int = 41,
    n_k: int = 201,
    span: float | None = None,
) -> SupportReport:
    """Sample the transform on the forbidden region and report a verdict.

    2D: forbidden Ky <= 2 alpha sampled over the x-support; 3D: the disk
    sqrt(Kx^2 + Ky^2) <= 2 alpha over the z-support.  The pass threshold is
    SUPPORT_ZERO_RTOL times the largest transform modulus found on a window
    of the allowed region, so verdicts are scale free.  Delta combs get the
    exact criterion: pass iff n*alpha1 > 2*alpha for every n with z_n != 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    comb = as_single_comb(v) if is_potential_2d(v) else None
    if isinstance(v, DeltaComb) or comb is not None:
        comb = comb if comb is not None else v
        bad = [
            n
            for n in range(-comb.order, comb.order + 1)
            if comb.coefficient(n) != 0 and n * comb.alpha1 <= 2 * alpha
        ]
        scale = max((abs(z) for z in comb.coefficients), default=0.0)
        worst = max((abs(comb.coefficient(n)) for n in bad), default=0.0)
        return SupportReport(
            passed=not bad,
            alpha=alpha,
            max_forbidden=worst,
            scale=scale,
            threshold=0.0,
            support=(0.0, 0.0),
            n_samples=2 * comb.order + 1,
            exact=True,
        )
    if span is None:
        span = 4.0 * alpha + 8.0
    if is_potential_2d(v):
        lo, hi = support_x(v)
        axis = np.linspace(lo, hi, n_axis)
        k_forbidden = np.linspace(2 * alpha - span, 2 * alpha, n_k, endpoint=False)
        k_allowed = np.linspace(2 * alpha, 2 * alpha + span, n_k)
        vals_f = np.abs(fourier_y(v, axis[:, None], k_forbidden[None, :]))
        vals_a = np.abs(fourier_y(v, axis[:, None], k_allowed[None, :]))
        max_f = float(vals_f.max()) if vals_f.size else 0.0
        scale = float(vals_a.max()) if vals_a.size else 0.0
        threshold = SUPPORT_ZERO_RTOL * scale
        return SupportReport(
            passed=max_f <= threshold,
            alpha=alpha,
            max_forbidden=max_f,
            scale=scale,
            threshold=threshold,
            support=(lo, hi),
            n_samples=int(vals_f.size),
        )
    if is_potential_3d(v):
        lo, hi = support_z(v)
        axis = np.linspace(lo, hi, n_axis)
        radii = np.linspace(0.0, 2 * alpha, n_k, endpoint=False)
        angles = np.linspace(0.0, 2 * math.pi, 25, endpoint=False)
        kx = np.outer(radii, np.cos(angles)).ravel()
        ky = np.outer(radii, np.sin(angles)).ravel()
        vals_f = np.abs(fourier_xy(v, kx[None, :], ky[None, :], axis[:, None]))
        box = np.linspace(2 * alpha, 2 * alpha + span, 41)
        vals_a = np.abs(
            fourier_xy(v, box[None, :, None], box[None, None, :], axis[:, None, None])
        )
        max_f = float(vals_f.max()) if vals_f.size else 0.0
        scale = float(vals_a.max()) if vals_a.size else 0.0
        threshold = SUPPORT_ZERO_RTOL * scale
        return SupportReport(
            passed=max_f <= threshold,
            alpha=alpha,
            max_forbidden=max_f,
            scale=scale,
            threshold=threshold,
            support=(lo, hi),
            n_samples=int(vals_f.size),
        )
    raise UnsupportedFamily(f"not a potential: {type(v).__name__}")


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _c2j(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _j2c(pair) -> complex:
    return complex(pair[0], pair[1])


def to_json(v) -> dict:
    """Serialize a potential to a JSON-ready dict with a "type" discriminator."""
    if isinstance(v, GaussianBump):
        return {
            "type": "gaussian_bump",
            "amplitude": _c2j(v.amplitude),
            "center": list(v.center),
            "sigma": list(v.sigma),
            "beta": v.beta,
        }
    if isinstance(v, DeltaComb):
        return {
            "type": "delta_comb",
            "coefficients": [_c2j(z) for z in v.coefficients],
            "alpha1": v.alpha1,
        }
    if isinstance(v, RationalDeformation2D):
        return {
            "type": "rational_deformation_2d",
            "envelope": {"center": v.envelope.center, "sigma": v.envelope.sigma},
            "alpha": v.alpha,
            "m": v.m,
            "a": v.a,
            "amplitude": _c2j(v.amplitude),
        }
    if isinstance(v, Tabulated2D):
        arr = np.asarray(v.values, dtype=complex)
        return {
            "type": "tabulated",
            "x0": v.x0,
            "y0": v.y0,
            "dx": v.dx,
            "dy": v.dy,
            "re": arr.real.tolist(),
            "im": arr.imag.tolist(),
        }
    if isinstance(v, Sum2D):
        return {"type": "sum", "members": [to_json(m) for m in v.members]}
    if isinstance(v, Gaussian3D):
        return {
            "type": "gaussian_3d",
            "amplitude": _c2j(v.amplitude),
            "widths": list(v.widths),
            "center": list(v.center),
        }
    if isinstance(v, RationalDeformation3D):
        return {
            "type": "rational_deformation_3d",
            "amplitude_tilde": _c2j(v.amplitude_tilde),
            "alpha": v.alpha,
            "ax": v.ax,
            "ay": v.ay,
            "az": v.az,
            "nx": v.nx,
            "ny": v.ny,
        }
    if isinstance(v, Sum3D):
        return {"type": "sum_3d", "members": [to_json(m) for m in v.members]}
    raise UnsupportedFamily(f"cannot serialize {type(v).__name__}")


def from_json(obj: dict):
    """Inverse of to_json."""
    kind = obj.get("type")
    if kind == "gaussian_bump":
        return GaussianBump(
            amplitude=_j2c(obj["amplitude"]),
            center=tuple(obj["center"]),
            sigma=tuple(obj["sigma"]),
            beta=obj.get("beta", 0.0),
        )
    if kind == "delta_comb":
        return DeltaComb(
            coefficients=tuple(_j2c(z) for z in obj["coefficients"]),
            alpha1=obj["alpha1"],
        )
    if kind == "rational_deformation_2d":
        env = obj["envelope"]
        return RationalDeformation2D(
            envelope=GaussianProfile(env["center"], env["sigma"]),
            alpha=obj["alpha"],
            m=obj["m"],
            a=obj["a"],
            amplitude=_j2c(obj["amplitude"]),
        )
    if kind == "tabulated":
        vals = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return Tabulated2D(
            obj["x0"], obj["y0"], obj["dx"], obj["dy"], tuple(map(tuple, vals.tolist()))
        )
    if kind == "sum":
        return Sum2D(tuple(from_json(m) for m in obj["members"]))
    if kind == "gaussian_3d":
        return Gaussian3D(
            amplitude=_j2c(obj["amplitude"]),
            widths=tuple(obj["widths"]),
            center=tuple(obj.get("center", (0.0, 0.0, 0.0))),
        )
    if kind == "rational_deformation_3d":
        return RationalDeformation3D(
            amplitude_tilde=_j2c(obj["amplitude_tilde"]),
            alpha=obj["alpha"],
            ax=obj["ax"],
            ay=obj["ay"],
            az=obj["az"],
            nx=obj["nx"],
            ny=obj["ny"],
        )
    if kind == "sum_3d":
        return Sum3D(tuple(from_json(m) for m in obj["members"]))
    raise UnsupportedFamily(f"unknown potential type {kind!r}")
