"""Verification experiments: invisibility, equivalence, comb truncation.

Each runner measures scattering observables for a family of wavenumbers
straddling the critical scale alpha and produces a machine-readable
report.  Pass bars are split by error mechanism: experiments whose
difference kernel vanishes node-exactly get near-machine bars, while
Born-oracle comparisons get solver-level bars.  Rows with k above alpha
are informational; distinguishability up there is a property of the
shipped defaults, not a theorem.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .born import born_2d, born_3d
from .config import EngineOptions
from .dynamics2d import delta_transfer_matrix, transfer_matrix
from .dynamics3d import hamiltonian_equality_check
from .errors import SingularOperator
from .amplitudes2d import (
    ScatteringTask,
    amplitude,
    default_theta_grid,
    diffraction_orders,
)
from .grids import build_disk_grid, build_grid_2d, build_lattice
from .potentials import DeltaComb, support_x

# Pass bars per mechanism (see module docstring).
NODE_EXACT_RTOL = 1e-10
COMB_EXACT_RTOL = 1e-13
INVISIBILITY_RTOL = 1e-8
BORN_LEVEL_RTOL = 1e-12

# Default oblique incidence: one-sided families only scatter above alpha
# when the incidence momentum leaves room for an upward transfer of 2 alpha
# inside the propagating window.
DEFAULT_THETA0 = -math.pi / 4


@dataclass(frozen=True)
class EquivalenceReport:
    """Per-k verdicts with full provenance."""

    experiment: str
    alpha: float
    entries: list
    engine: dict = field(default_factory=dict)

    def all_pass(self) -> bool:
        """True when no asserted row failed (informational rows ignored)."""
        return all(e["verdict"] not in ("fail", "singular") for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "alpha": self.alpha,
            "entries": self.entries,
            "engine": self.engine,
        }

    def to_json(self) -> str:
        """Canonical (byte-deterministic) JSON."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _entry(k, side, max_abs_diff, scale, rel_dev, verdict) -> dict:
    return {
        "k": k,
        "side": side,
        "max_abs_diff": max_abs_diff,
        "scale": scale,
        "rel_dev": rel_dev,
        "verdict": verdict,
    }


def _singular_entry(k, side) -> dict:
    return _entry(k, side, None, None, None, "singular")


def _pool_map(fn, items, threads: int):
    """Run fn over items in a work pool; order of results follows items."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sorted_entries(entries) -> list:
    return sorted(entries, key=lambda e: (e["k"], e["side"]))


def _engine_meta(options: EngineOptions, slices_used) -> dict:
    return {
        "nodes": options.n_nodes,
        "slices": max(slices_used) if slices_used else 0,
        "tol": options.tol,
        "version": __version__,
    }


def run_invisibility(
    v,
    alpha: float,
    ks,
    theta0: float = DEFAULT_THETA0,
    thetas=None,
    sides=("left", "right"),
    options: EngineOptions | None = None,
) -> EquivalenceReport:
    """Measure max_theta |f| across k and compare against the Born scale.

    The scale is max |f_Born| at the smallest probed k above alpha (or at
    1.5 alpha if none is probed).  Rows with k <= alpha pass when the
    amplitude stays below INVISIBILITY_RTOL times that scale.
    """
    opts = options if options is not None else EngineOptions()
    thetas = default_theta_grid() if thetas is None else np.asarray(thetas, float)
    ks = sorted(float(k) for k in ks)
    above = [k for k in ks if k > alpha]
    k_scale = min(above) if above else 1.5 * alpha
    scale = max(
        float(np.abs(born_2d(v, k_scale, theta0, thetas, side)).max()) for side in sides
    )
    slices_used = []

    def _one(k):
        rows = []
        try:
            grid = build_grid_2d(k, opts.n_nodes, theta0, thetas)
            tm = transfer_matrix(
                v, grid, slices=opts.slices, tol=opts.tol,
                max_doublings=opts.max_doublings, extrapolate=opts.extrapolate,
            )
            slices_used.append(tm.slices)
            for side in sides:
                task = ScatteringTask(k, side, theta0, thetas)
                table = amplitude(tm, task)
                peak = float(np.abs(table.f).max())
                rel = peak / scale if scale > 0 else 0.0
                if k <= alpha:
                    verdict = "pass" if rel <= INVISIBILITY_RTOL else "fail"
                else:
                    verdict = "info"
                rows.append(_entry(k, side, peak, scale, rel, verdict))
        except SingularOperator:
            rows = [_singular_entry(k, side) for side in sides]
        return rows

    rows = [r for batch in _pool_map(_one, ks, opts.resolve_threads()) for r in batch]
    return EquivalenceReport(
        "invisibility", float(alpha), _sorted_entries(rows), _engine_meta(opts, slices_used)
    )


def run_equivalence(
    v1,
    v2,
    alpha: float,
    ks,
    theta0: float = DEFAULT_THETA0,
    thetas=None,
    sides=("left", "right"),
    options: EngineOptions | None = None,
) -> EquivalenceReport:
    """Compare amplitudes of two potentials across k and both sides.

    Both transfer matrices use the union x-range, so when the difference
    kernel vanishes at the nodes the two assembled evolutions are
    identical matrices and the deviation is exactly zero.
    """
    opts = options if options is not None else EngineOptions()
    thetas = default_theta_grid() if thetas is None else np.asarray(thetas, float)
    ks = sorted(float(k) for k in ks)
    lo = min(support_x(v1)[0], support_x(v2)[0])
    hi = max(support_x(v1)[1], support_x(v2)[1])
    slices_used = []

    def _one(k):
        rows = []
        try:
            grid = build_grid_2d(k, opts.n_nodes, theta0, thetas)
            tms = [
                transfer_matrix(
                    v, grid, x_range=(lo, hi), slices=opts.slices, tol=opts.tol,
                    max_doublings=opts.max_doublings, extrapolate=opts.extrapolate,
                )
                for v in (v1, v2)
            ]
            slices_used.extend(t.slices for t in tms)
            for side in sides:
                task = ScatteringTask(k, side, theta0, thetas)
                f1 = amplitude(tms[0], task).f
                f2 = amplitude(tms[1], task).f
                diff = float(np.abs(f1 - f2).max())
                scale = float(np.abs(f1).max())
                rel = diff / scale if scale > 0 else 0.0
                if k <= alpha:
                    verdict = "pass" if rel <= NODE_EXACT_RTOL else "fail"
                else:
                    verdict = "info"
                rows.append(_entry(k, side, diff, scale, rel, verdict))
        except SingularOperator:
            rows = [_singular_entry(k, side) for side in sides]
        return rows

    rows = [r for batch in _pool_map(_one, ks, opts.resolve_threads()) for r in batch]
    return EquivalenceReport(
        "equivalence", float(alpha), _sorted_entries(rows), _engine_meta(opts, slices_used)
    )


def comb_alpha_n(alpha1: float, n: int) -> float:
    """Critical wavenumber of the truncation claim: alpha1 (N + 1) / 2."""
    return alpha1 * (n + 1) / 2.0


def truncate_comb(comb: DeltaComb, n: int) -> DeltaComb:
    """Drop Fourier coefficients beyond |n|."""
    coeffs = [comb.coefficient(j) for j in range(-n, n + 1)]
    return DeltaComb(tuple(coeffs), comb.alpha1)


def run_comb_truncation(
    coefficients,
    alpha1: float,
    n_small: int,
    n_large: int,
    ks,
    theta0: float = 0.35,
    options: EngineOptions | None = None,
) -> EquivalenceReport:
    """Compare order tables of a comb truncated at N versus N' > N.

    Below alpha_N = alpha1 (N + 1)/2 every pair of propagating orders
    differs by at most N lattice steps, so both lattice Hamiltonians are
    the same matrix and the tables must agree to near-machine precision.
    """
    if n_large <= n_small:
        raise ValueError("need n_large > n_small")
    opts = options if options is not None else EngineOptions()
    full = DeltaComb(tuple(coefficients), alpha1)
    if full.order < n_large:
        raise ValueError("coefficient list shorter than the large truncation")
    comb_a = truncate_comb(full, n_small)
    comb_b = truncate_comb(full, n_large)
    alpha_n = comb_alpha_n(alpha1, n_small)
    ks = sorted(float(k) for k in ks)

    def _one(k):
        p0 = k * math.sin(theta0)
        try:
            lat = build_lattice(k, p0, comb_a)
            ta = diffraction_orders(delta_transfer_matrix(comb_a, lat), theta0)
            tb = diffraction_orders(delta_transfer_matrix(comb_b, lat), theta0)
            diff = float(
                max(np.abs(ta.r - tb.r).max(), np.abs(ta.t - tb.t).max())
            )
            scale = float(
                max(np.abs(ta.r).max(initial=0.0), np.abs(ta.t).max(initial=0.0), 1.0)
            )
            rel = diff / scale
            if k < alpha_n:
                verdict = "pass" if rel <= COMB_EXACT_RTOL else "fail"
            else:
                verdict = "info"
            return [_entry(k, "left", diff, scale, rel, verdict)]
        except SingularOperator:
            return [_singular_entry(k, "left")]

    rows = [r for batch in _pool_map(_one, ks, opts.resolve_threads()) for r in batch]
    engine = _engine_meta(opts, [1])
    engine["alpha_n"] = alpha_n
    return EquivalenceReport("comb-truncation", alpha_n, _sorted_entries(rows), engine)


def _direction_pairs(n_random: int, seed: int):
    """Random unit-direction pairs plus deterministic diagonal extremes.

    The deterministic pairs maximize the (x+y)-momentum transfer, which is
    where a quadrant-supported deformation first becomes visible once
    k exceeds sqrt(2) alpha.
    """
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_random, 2, 3))
    pairs = [tuple(u / np.linalg.norm(u) for u in pair) for pair in raw]
    diag = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
    pairs.append((-diag, diag))
    tilted = np.array([1.0, 1.0, 0.5])
    tilted /= np.linalg.norm(tilted)
    pairs.append((-diag, tilted))
    return pairs


def run_equivalence_3d(
    v1,
    v2,
    alpha: float,
    ks,
    n_directions: int = 1000,
    seed: int = 7,
    n_radial: int | None = None,
    n_angular: int | None = None,
    options: EngineOptions | None = None,
) -> EquivalenceReport:
    """Operator-level equality check plus Born-amplitude comparison.

    Pass at k <= alpha requires the difference-Hamiltonian kernel to vanish
    node-exactly on the disk grid and the Born amplitudes to agree to
    BORN_LEVEL_RTOL at every sampled direction pair.
    """
    opts = options if options is not None else EngineOptions()
    nr = n_radial if n_radial is not None else opts.n_radial
    na = n_angular if n_angular is not None else opts.n_angular
    ks = sorted(float(k) for k in ks)

    def _one(k):
        grid = build_disk_grid(k, nr, na)
        op_report = hamiltonian_equality_check(v1, v2, k, grid)
        pairs = _direction_pairs(n_directions, seed)
        diffs = []
        scales = []
        for s0, s in pairs:
            f1 = born_3d(v1, k, s0, s)
            f2 = born_3d(v2, k, s0, s)
            diffs.append(abs(f1 - f2))
            scales.append(abs(f1))
        born_diff = max(diffs)
        born_scale = max(max(scales), 1e-300)
        born_rel = born_diff / born_scale
        diff = max(op_report.max_kernel_modulus, born_diff)
        rel = max(
            born_rel,
            op_report.max_kernel_modulus / max(born_scale, 1e-300),
        )
        if k <= alpha:
            ok = op_report.max_kernel_modulus == 0.0 and born_rel <= BORN_LEVEL_RTOL
            verdict = "pass" if ok else "fail"
        else:
            verdict = "info"
        return [_entry(k, "-", diff, born_scale, rel, verdict)]

    rows = [r for batch in _pool_map(_one, ks, opts.resolve_threads()) for r in batch]
    engine = _engine_meta(opts, [1])
    engine["grid"] = [nr, na]
    engine["n_directions"] = n_directions
    engine["seed"] = seed
    return EquivalenceReport("equivalence-3d", float(alpha), _sorted_entries(rows), engine)
