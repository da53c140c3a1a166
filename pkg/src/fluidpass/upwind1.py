"""First-order upwind discretisation on the vertex grid.

Unknowns are stored state-major: ``K[alpha * n + p]`` approximates
``K_alpha(x_p, t)``.  The semi-discrete system is ``dK/dt = A K`` with

* draining states (``r <= 0``): backward difference ``r/dx (K^p - K^{p-1})``
  on rows ``p >= 1``; row 0 is the Dirichlet value ``K = 1`` and is all zero;
* filling states (``r > 0``): forward difference ``r/dx (K^{p+1} - K^p)`` on
  interior rows; rows 0 and ``n-1`` carry the coupling term only (row
  ``n-1`` is the ODE boundary at ``bmax``).

Every non-Dirichlet row adds the coupling ``sum_beta q_{alpha beta} K_beta^p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, WrongGridKind
from .mesh import VERTEX, SpaceGrid
from .model import FluidModel


@dataclass(frozen=True, eq=False)
class SpatialOperator:
    A: sp.csr_matrix
    model: FluidModel
    grid: SpaceGrid
    dirichlet: np.ndarray  # boolean mask of rows pinned to their initial value

    @property
    def size(self) -> int:
        return self.A.shape[0]

    def __matmul__(self, field):
        return apply(self, field)


def _check_vertex(grid: SpaceGrid) -> None:
    if grid.kind != VERTEX:
        raise WrongGridKind(f"first-order upwind needs a vertex grid, got {grid.kind}")


def assemble(model: FluidModel, grid: SpaceGrid) -> SpatialOperator:
    _check_vertex(grid)
    S, n = model.S, grid.n
    N = S * n
    p = np.arange(n)
    rows, cols, vals = [], [], []

    dirichlet = np.zeros(N, dtype=bool)
    coupled = np.ones((S, n), dtype=bool)
    for a, r in enumerate(model.rates):
        base = a * n
        c = r / grid.dx
        if r <= 0:
            dirichlet[base] = True
            coupled[a, 0] = False
            ip = p[1:]
            rows += [base + ip, base + ip]
            cols += [base + ip, base + ip - 1]
            vals += [np.full(n - 1, c), np.full(n - 1, -c)]
        else:
            ip = p[1:-1]
            rows += [base + ip, base + ip]
            cols += [base + ip + 1, base + ip]
            vals += [np.full(n - 2, c), np.full(n - 2, -c)]

    # coupling Q (x) I on every non-Dirichlet row
    for a in range(S):
        ip = p[coupled[a]]
        for b in range(S):
            q = model.Q[a, b]
            if q == 0.0:
                continue
            rows.append(a * n + ip)
            cols.append(b * n + ip)
            vals.append(np.full(ip.size, q))

    if rows:
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N)).tocsr()
    else:
        A = sp.csr_matrix((N, N))
    A.sum_duplicates()
    A.eliminate_zeros()
    dirichlet.flags.writeable = False
    return SpatialOperator(A=A, model=model, grid=grid, dirichlet=dirichlet)


def initial_field(model: FluidModel, grid: SpaceGrid) -> np.ndarray:
    """``K(x, 0)``: zero everywhere except ``K(0, 0) = 1`` for draining states."""
    _check_vertex(grid)
    K = np.zeros((model.S, grid.n))
    K[model.rates <= 0, 0] = 1.0
    return K.ravel()


def apply(op: SpatialOperator, field: np.ndarray) -> np.ndarray:
    field = np.asarray(field)
    if field.shape[0] != op.size:
        raise DimensionMismatch(f"field of length {field.shape[0]} for operator of size {op.size}")
    return op.A @ field
