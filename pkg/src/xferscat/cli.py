"""Command-line surface: config parsing, experiment dispatch, artifact output.

Angles are degrees here, radians everywhere else.  Exit codes: 0 success
or all-pass, 2 verification failure, 1 usage or engine error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import SCHEMA_VERSION, __version__
from .amplitudes2d import ScatteringTask, default_theta_grid, diffraction_orders, solve_amplitude
from .born import born_2d
from .config import EngineOptions
from .dynamics2d import delta_transfer_matrix
from .equivalence import (
    DEFAULT_THETA0,
    run_comb_truncation,
    run_equivalence,
    run_equivalence_3d,
    run_invisibility,
)
from .errors import XferscatError
from .grids import build_grid_2d, build_lattice
from .potentials import (
    DeltaComb,
    GaussianProfile,
    as_single_comb,
    construct_deformation_2d,
    construct_deformation_3d,
    from_json,
    is_potential_2d,
    is_potential_3d,
    to_json,
)
from .reports import (
    amplitude_csv,
    atomic_write_text,
    grid_json,
    order_csv,
    polar_svg,
    report_json,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit code 1, not 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    with open(path) as handle:
        try:
            cfg = json.load(handle)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _engine_options(cfg: dict, args) -> EngineOptions:
    eng = dict(cfg.get("engine", {}))
    for key, attr in (
        ("nodes", "nodes"),
        ("slices", "slices"),
        ("tol", "tol"),
        ("max_doublings", "max_doublings"),
        ("threads", "threads"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            eng[key] = val
    return EngineOptions(
        n_nodes=int(eng.get("nodes", 64)),
        slices=eng.get("slices"),
        tol=float(eng.get("tol", 1e-8)),
        max_doublings=int(eng.get("max_doublings", 12)),
        extrapolate=bool(eng.get("extrapolate", True)),
        n_radial=int(eng.get("n_radial", 16)),
        n_angular=int(eng.get("n_angular", 24)),
        threads=eng.get("threads"),
    )


def _potentials(cfg: dict, n_min: int = 1):
    raw = cfg.get("potentials")
    if not isinstance(raw, list) or len(raw) < n_min:
        raise UsageError(f"config needs a 'potentials' list with >= {n_min} entries")
    try:
        return [from_json(p) for p in raw]
    except (KeyError, XferscatError, TypeError, ValueError) as exc:
        raise UsageError(f"bad potential in config: {exc}") from exc


def _k_list(cfg: dict) -> list[float]:
    ks = cfg.get("k_list")
    if not isinstance(ks, list) or not ks:
        raise UsageError("config needs a nonempty 'k_list'")
    ks = [float(k) for k in ks]
    if any(k <= 0 for k in ks):
        raise UsageError("k_list entries must be positive")
    if sorted(ks) != ks:
        raise UsageError("k_list must be sorted ascending")
    return ks


def _theta_grid(cfg: dict) -> np.ndarray:
    spec = cfg.get("theta_grid", {"n": 181})
    if "list_deg" in spec:
        return np.deg2rad(np.asarray(spec["list_deg"], dtype=float))
    return default_theta_grid(int(spec.get("n", 181)))


def _theta0_list(cfg: dict) -> list[float]:
    degs = cfg.get("theta0_deg", [math.degrees(DEFAULT_THETA0)])
    if not isinstance(degs, list):
        degs = [degs]
    return [math.radians(float(d)) for d in degs]


def _sides(cfg: dict) -> list[str]:
    sides = cfg.get("sides", ["left", "right"])
    for s in sides:
        if s not in ("left", "right"):
            raise UsageError(f"bad side {s!r}")
    return sides


def _out_path(args) -> str:
    if not args.out:
        raise UsageError("--out is required")
    return args.out


def _task_stub(k: float, theta0: float, side: str) -> str:
    return f"k{k:g}_t{math.degrees(theta0):g}_{side}"


def _cmd_amplitude(args) -> int:
    cfg = _load_config(args.config)
    opts = _engine_options(cfg, args)
    v = _potentials(cfg)[0]
    thetas = _theta_grid(cfg)
    tables = []
    first_grid = None
    for k in _k_list(cfg):
        for theta0 in _theta0_list(cfg):
            tm = None
            for side in _sides(cfg):
                task = ScatteringTask(k, side, theta0, thetas)
                if tm is None:
                    table, tm = solve_amplitude(v, task, opts)
                    if first_grid is None:
                        first_grid = tm.grid
                else:
                    from .amplitudes2d import amplitude as _amp

                    table = _amp(tm, task)
                tables.append(table)
    atomic_write_text(_out_path(args), amplitude_csv(tables))
    if args.dump_grid and first_grid is not None:
        atomic_write_text(args.dump_grid, grid_json(first_grid))
    if args.svg_dir:
        os.makedirs(args.svg_dir, exist_ok=True)
        for table in tables:
            stub = _task_stub(table.k, table.theta0, table.side)
            atomic_write_text(
                os.path.join(args.svg_dir, f"amplitude_{stub}.svg"), polar_svg(table)
            )
    return 0


def _cmd_born(args) -> int:
    cfg = _load_config(args.config)
    v = _potentials(cfg)[0]
    thetas = _theta_grid(cfg)
    from .amplitudes2d import AmplitudeTable

    tables = []
    for k in _k_list(cfg):
        for theta0 in _theta0_list(cfg):
            for side in _sides(cfg):
                f = born_2d(v, k, theta0, thetas, side)
                tables.append(AmplitudeTable(k, theta0, side, thetas.copy(), f, {}))
    atomic_write_text(_out_path(args), amplitude_csv(tables))
    return 0


def _cmd_orders(args) -> int:
    cfg = _load_config(args.config)
    v = _potentials(cfg)[0]
    comb = as_single_comb(v)
    if comb is None:
        raise UsageError("orders needs a delta_comb potential")
    ks = _k_list(cfg)
    theta0 = _theta0_list(cfg)[0]
    out = _out_path(args)
    for k in ks:
        lat = build_lattice(k, k * math.sin(theta0), comb)
        table = diffraction_orders(delta_transfer_matrix(comb, lat), theta0)
        path = out
        if len(ks) > 1:
            root, ext = os.path.splitext(out)
            path = f"{root}_k{k:g}{ext}"
        atomic_write_text(path, order_csv(table))
    return 0


def _cmd_construct(args) -> int:
    base = None
    if args.base:
        with open(args.base) as handle:
            base = from_json(json.load(handle))
    amp = complex(args.re, args.im)
    if args.kind == "deformation2d":
        if base is not None and not is_potential_2d(base):
            raise UsageError("base must be a 2D potential")
        v = construct_deformation_2d(
            base,
            alpha=args.alpha,
            m=args.m,
            a=args.a,
            amplitude=amp,
            envelope=GaussianProfile(args.env_center, args.env_sigma),
        )
    elif args.kind == "deformation3d":
        if base is not None and not is_potential_3d(base):
            raise UsageError("base must be a 3D potential")
        v = construct_deformation_3d(
            base,
            alpha=args.alpha,
            amplitude_tilde=amp,
            ax=args.ax,
            ay=args.ay,
            az=args.az,
            nx=args.nx,
            ny=args.ny,
        )
    else:
        raise UsageError(f"unknown construct kind {args.kind!r}")
    atomic_write_text(_out_path(args), json.dumps(to_json(v), indent=2, sort_keys=True) + "\n")
    return 0


def _verdict_exit(report, args) -> int:
    atomic_write_text(_out_path(args), report_json(report))
    return 0 if report.all_pass() else 2


def _cmd_verify_invisibility(args) -> int:
    cfg = _load_config(args.config)
    opts = _engine_options(cfg, args)
    v = _potentials(cfg)[0]
    report = run_invisibility(
        v,
        alpha=float(cfg["alpha"]),
        ks=_k_list(cfg),
        theta0=_theta0_list(cfg)[0],
        thetas=_theta_grid(cfg),
        sides=tuple(_sides(cfg)),
        options=opts,
    )
    return _verdict_exit(report, args)


def _cmd_verify_equivalence(args) -> int:
    cfg = _load_config(args.config)
    opts = _engine_options(cfg, args)
    pots = _potentials(cfg, n_min=2)
    report = run_equivalence(
        pots[0],
        pots[1],
        alpha=float(cfg["alpha"]),
        ks=_k_list(cfg),
        theta0=_theta0_list(cfg)[0],
        thetas=_theta_grid(cfg),
        sides=tuple(_sides(cfg)),
        options=opts,
    )
    return _verdict_exit(report, args)


def _cmd_verify_comb(args) -> int:
    cfg = _load_config(args.config)
    opts = _engine_options(cfg, args)
    v = _potentials(cfg)[0]
    comb = as_single_comb(v)
    if comb is None:
        raise UsageError("verify-comb needs a delta_comb potential")
    spec = cfg.get("comb", {})
    report = run_comb_truncation(
        comb.coefficients,
        comb.alpha1,
        n_small=int(spec.get("n_small", 1)),
        n_large=int(spec.get("n_large", comb.order)),
        ks=_k_list(cfg),
        theta0=_theta0_list(cfg)[0],
        options=opts,
    )
    return _verdict_exit(report, args)


def _cmd_verify_3d(args) -> int:
    cfg = _load_config(args.config)
    opts = _engine_options(cfg, args)
    pots = _potentials(cfg, n_min=2)
    if not (is_potential_3d(pots[0]) and is_potential_3d(pots[1])):
        raise UsageError("verify-3d needs two 3D potentials")
    dirs = cfg.get("directions", {})
    report = run_equivalence_3d(
        pots[0],
        pots[1],
        alpha=float(cfg["alpha"]),
        ks=_k_list(cfg),
        n_directions=int(dirs.get("n", 1000)),
        seed=int(dirs.get("seed", 7)),
        options=opts,
    )
    return _verdict_exit(report, args)


def _add_engine_flags(parser) -> None:
    parser.add_argument("--nodes", type=int, default=None, help="quadrature nodes (2D)")
    parser.add_argument("--slices", type=int, default=None, help="initial slice count")
    parser.add_argument("--tol", type=float, default=None, help="slice convergence tolerance")
    parser.add_argument("--max-doublings", dest="max_doublings", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None, help="work-pool size")


def build_parser() -> _Parser:
    parser = _Parser(prog="xferscat", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"xferscat {__version__} (report schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", required=True, help="output path")
        _add_engine_flags(p)

    p = sub.add_parser("amplitude", help="scattering amplitudes to CSV")
    _common(p)
    p.add_argument("--svg-dir", default=None, help="write polar |f| SVG plots here")
    p.add_argument("--dump-grid", default=None, help="debug: dump the first grid as JSON")
    p.set_defaults(func=_cmd_amplitude)

    p = sub.add_parser("orders", help="diffraction order table to CSV")
    _common(p)
    p.set_defaults(func=_cmd_orders)

    p = sub.add_parser("born", help="first Born amplitudes to CSV")
    _common(p)
    p.set_defaults(func=_cmd_born)

    p = sub.add_parser("construct", help="emit a potential JSON")
    p.add_argument("--kind", required=True, choices=["deformation2d", "deformation3d"])
    p.add_argument("--base", default=None, help="base potential JSON to deform")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--re", type=float, default=1.0, help="amplitude real part")
    p.add_argument("--im", type=float, default=0.0, help="amplitude imaginary part")
    p.add_argument("--m", type=int, default=0, help="2D: polynomial order")
    p.add_argument("--a", type=float, default=1.0, help="2D: decay length")
    p.add_argument("--env-center", dest="env_center", type=float, default=0.0)
    p.add_argument("--env-sigma", dest="env_sigma", type=float, default=1.0)
    p.add_argument("--ax", type=float, default=1.0)
    p.add_argument("--ay", type=float, default=1.0)
    p.add_argument("--az", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=1)
    p.add_argument("--ny", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_construct)

    for name, fn in (
        ("verify-invisibility", _cmd_verify_invisibility),
        ("verify-equivalence", _cmd_verify_equivalence),
        ("verify-comb", _cmd_verify_comb),
        ("verify-3d", _cmd_verify_3d),
    ):
        p = sub.add_parser(name, help=f"{name} report to JSON")
        _common(p)
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print("run 'xferscat --help' for the config schema", file=sys.stderr)
        return 1
    except XferscatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
