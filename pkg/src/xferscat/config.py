"""Engine options shared by the pipelines and the CLI."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class EngineOptions:
    """Discretization and convergence knobs.

    slices=None means start from the phase-resolving default
    ceil(10 k L / pi) and refine adaptively.
    """

    n_nodes: int = 64
    slices: int | None = None
    tol: float = 1e-8
    max_doublings: int = 12
    extrapolate: bool = True
    n_radial: int = 16
    n_angular: int = 24
    threads: int | None = None

    def resolve_threads(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        env = os.environ.get("XFERSCAT_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                pass
        return os.cpu_count() or 1
