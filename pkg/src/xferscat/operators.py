"""Identity-plus-kernel operator algebra on a momentum grid.

An operator phi -> c phi + integral A(p, q) phi(q) dq is stored as the
complex identity coefficient ``c`` together with the weighted kernel matrix
``kernel_w`` whose (i, j) entry already contains the quadrature weight w_j,
so application to node values is ``c phi + kernel_w @ phi``.

Delta inputs never get discretized: designated zero-weight nodes carry
weight-free kernel columns (``delta_cols``), and identity parts stay
symbolic so expressions like M11 - 1 and 1 - M22^{-1} are exact kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, SingularOperator

# Condition-number ceiling beyond which a solve is reported as singular.
COND_LIMIT = 1e12


def _grid_delta_nodes(grid) -> tuple[int, ...]:
    return getattr(grid, "delta_nodes", ())


def _same_grid(g1, g2) -> bool:
    if g1 is g2:
        return True
    return (
        type(g1) is type(g2)
        and g1.k == g2.k
        and g1.n == g2.n
        and np.array_equal(getattr(g1, "p", getattr(g1, "px", None)),
                           getattr(g2, "p", getattr(g2, "px", None)))
    )


@dataclass(frozen=True)
class OperatorRep:
    """c * identity + integral kernel, discretized on one grid."""

    grid: object
    c: complex
    kernel_w: np.ndarray
    delta_cols: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.grid.n
        if self.kernel_w.shape != (n, n):
            raise ValueError("kernel shape does not match the grid")

    @classmethod
    def zero(cls, grid) -> "OperatorRep":
        dcols = {int(i): np.zeros(grid.n, dtype=complex) for i in _grid_delta_nodes(grid)}
        return cls(grid, 0.0 + 0.0j, np.zeros((grid.n, grid.n), dtype=complex), dcols)

    @classmethod
    def identity(cls, grid) -> "OperatorRep":
        dcols = {int(i): np.zeros(grid.n, dtype=complex) for i in _grid_delta_nodes(grid)}
        return cls(grid, 1.0 + 0.0j, np.zeros((grid.n, grid.n), dtype=complex), dcols)

    @classmethod
    def from_kernel(cls, grid, kernel: np.ndarray, delta_nodes=None) -> "OperatorRep":
        """Wrap a weight-free kernel matrix; weights are applied here."""
        kernel = np.asarray(kernel, dtype=complex)
        kernel_w = kernel * grid.w[np.newaxis, :]
        nodes = _grid_delta_nodes(grid) if delta_nodes is None else delta_nodes
        dcols = {int(i): kernel[:, int(i)].copy() for i in nodes}
        return cls(grid, 0.0 + 0.0j, kernel_w, dcols)

    def apply(self, phi: np.ndarray) -> np.ndarray:
        """Apply to a vector of node values."""
        phi = np.asarray(phi, dtype=complex)
        return self.c * phi + self.kernel_w @ phi

    def apply_to_delta(self, i0: int) -> tuple[complex, np.ndarray]:
        """Apply to delta(p - p_i0): symbolic delta coefficient plus smooth part.

        Uses the stored weight-free kernel column; augmented nodes have zero
        weight so the weighted matrix cannot provide it.
        """
        if i0 not in self.delta_cols:
            raise KeyError(f"node {i0} carries no delta column on this operator")
        return self.c, self.delta_cols[i0].copy()

    def matrix(self) -> np.ndarray:
        """Dense matrix acting on node values: c I + kernel_w."""
        return self.c * np.eye(self.grid.n, dtype=complex) + self.kernel_w


def op_compose(a: OperatorRep, b: OperatorRep) -> OperatorRep:
    """The operator (a o b): apply b first, then a.

    Identity coefficients multiply exactly; kernels combine as
    c_a B + c_b A + A B, so no delta function is ever represented
    numerically.
    """
    if not _same_grid(a.grid, b.grid):
        raise GridMismatch("composition operands live on different grids")
    kernel_w = a.c * b.kernel_w + b.c * a.kernel_w + a.kernel_w @ b.kernel_w
    dcols = {}
    for i0 in set(a.delta_cols) & set(b.delta_cols):
        dcols[i0] = (
            b.c * a.delta_cols[i0]
            + a.c * b.delta_cols[i0]
            + a.kernel_w @ b.delta_cols[i0]
        )
    return OperatorRep(a.grid, a.c * b.c, kernel_w, dcols)


def op_add(a: OperatorRep, b: OperatorRep, fa: complex = 1.0, fb: complex = 1.0) -> OperatorRep:
    """Linear combination fa * a + fb * b."""
    if not _same_grid(a.grid, b.grid):
        raise GridMismatch("sum operands live on different grids")
    dcols = {
        i0: fa * a.delta_cols[i0] + fb * b.delta_cols[i0]
        for i0 in set(a.delta_cols) & set(b.delta_cols)
    }
    return OperatorRep(
        a.grid, fa * a.c + fb * b.c, fa * a.kernel_w + fb * b.kernel_w, dcols
    )


def op_solve(op: OperatorRep, rhs: np.ndarray, return_residual: bool = False):
    """Solve (c I + kernel) x = rhs by dense LU with partial pivoting.

    Raises SingularOperator when the condition estimate exceeds COND_LIMIT,
    which in this problem signals a spectral singularity of the discretized
    transfer-matrix block rather than a benign roundoff issue.
    """
    mat = op.matrix()
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularOperator(f"condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}")
    rhs = np.asarray(rhs, dtype=complex)
    x = np.linalg.solve(mat, rhs)
    if return_residual:
        residual = float(np.linalg.norm(mat @ x - rhs))
        return x, residual
    return x


def op_solve_delta(op: OperatorRep, i0: int) -> tuple[complex, np.ndarray]:
    """Solve (c I + kernel) x = delta(p - p_i0) without discretizing the delta.

    x = (1/c) delta + u with u = -solve(c I + kernel, column) / c, where
    ``column`` is the weight-free kernel column at i0.
    """
    if op.c == 0:
        raise SingularOperator("delta solve needs a nonzero identity coefficient")
    _, col = op.apply_to_delta(i0)
    u = -op_solve(op, col) / op.c
    return 1.0 / op.c, u


@dataclass(frozen=True)
class BlockOperator:
    """2x2 array of operators sharing one grid (components 1 and 2)."""

    m11: OperatorRep
    m12: OperatorRep
    m21: OperatorRep
    m22: OperatorRep

    def __post_init__(self):
        g = self.m11.grid
        for op in (self.m12, self.m21, self.m22):
            if not _same_grid(op.grid, g):
                raise GridMismatch("blocks live on different grids")

    @property
    def grid(self):
        return self.m11.grid

    @classmethod
    def identity(cls, grid) -> "BlockOperator":
        return cls(
            OperatorRep.identity(grid),
            OperatorRep.zero(grid),
            OperatorRep.zero(grid),
            OperatorRep.identity(grid),
        )

    @classmethod
    def zero(cls, grid) -> "BlockOperator":
        z = OperatorRep.zero(grid)
        return cls(z, z, z, z)

    def blocks(self):
        return ((self.m11, self.m12), (self.m21, self.m22))

    @property
    def block_trace(self) -> complex:
        return self.m11.c + self.m22.c

    def compose(self, other: "BlockOperator") -> "BlockOperator":
        """Block-matrix product self @ other."""
        return BlockOperator(
            op_add(op_compose(self.m11, other.m11), op_compose(self.m12, other.m21)),
            op_add(op_compose(self.m11, other.m12), op_compose(self.m12, other.m22)),
            op_add(op_compose(self.m21, other.m11), op_compose(self.m22, other.m21)),
            op_add(op_compose(self.m21, other.m12), op_compose(self.m22, other.m22)),
        )

    def dense(self) -> np.ndarray:
        """Stacked 2n x 2n matrix acting on (component1, component2) values."""
        return np.block(
            [
                [self.m11.matrix(), self.m12.matrix()],
                [self.m21.matrix(), self.m22.matrix()],
            ]
        )
