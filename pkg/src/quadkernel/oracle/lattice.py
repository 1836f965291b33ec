"""Stationary law of a walk on the truncated grid ``[0, N]^2``.

Jumps that would leave the grid are turned into stays (reflecting far
walls). With ``pi_00`` pinned to 1, the balance equations become a
nonsingular M-matrix system whose right-hand side is nonnegative; sparse LU
with diagonal pivots and a symmetric fill-reducing ordering keeps every
elimination step subtraction-free off the diagonal, which is what makes tiny
probabilities (far below machine epsilon times the largest) come out with
small relative error. Diagonal entries are built as sums of outflow rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from ..errors import ConvergenceError, DomainError
from ..model import DiscreteModel, validate_discrete

WALL_BAND = 5


@dataclass(frozen=True)
class LatticeSolution:
    N: int
    pi: np.ndarray            # pi[i, j], shape (N+1, N+1)
    policy: str
    residual: float           # max |balance| over cells away from the far walls
    wall_mass: float          # mass within WALL_BAND cells of the far walls

    def diagonal(self) -> np.ndarray:
        d = np.arange(self.N + 1)
        return self.pi[d, d]

    def generating_function(self, x, y):
        """Truncated ``sum pi_ij x^i y^j``."""
        i = np.arange(self.N + 1)
        return (x ** i) @ self.pi @ (y ** i)


def _flows(model: DiscreteModel, N: int) -> sp.csr_matrix:
    n1 = N + 1
    I, J = np.meshgrid(np.arange(n1), np.arange(n1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    fam = np.where((I > 0) & (J > 0), 0, np.where(J == 0, np.where(I > 0, 1, 3), 2))
    rows, cols, vals = [], [], []
    for f, name in enumerate(("interior", "hwall", "vwall", "origin")):
        m = fam == f
        for (di, dj), p in model.family(name).items():
            if (di, dj) == (0, 0) or p == 0:
                continue
            ti, tj = I[m] + di, J[m] + dj
            ok = (ti >= 0) & (ti <= N) & (tj >= 0) & (tj <= N)
            rows.append(I[m][ok] * n1 + J[m][ok])
            cols.append(ti[ok] * n1 + tj[ok])
            vals.append(np.full(ok.sum(), p))
    r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    return sp.csr_matrix((v, (r, c)), shape=(n1 * n1, n1 * n1))


def lattice_stationary(model: DiscreteModel, N: int) -> LatticeSolution:
    if N < 10:
        raise DomainError("N must be at least 10")
    validate_discrete(model)
    F = _flows(model, N)
    out = np.asarray(F.sum(axis=1)).ravel()
    A = (sp.diags(out) - F).T.tocsc()     # A pi = 0
    B = A[1:, 1:].tocsc()
    rhs = -A[1:, 0].toarray().ravel()
    try:
        lu = sla.splu(B, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise ConvergenceError(f"lattice factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    pi = np.concatenate([[1.0], x])
    if not np.all(np.isfinite(pi)) or np.any(pi < 0):
        raise ConvergenceError("lattice solve produced negative or non-finite mass")
    pi /= pi.sum()
    bal = (A @ pi).reshape(N + 1, N + 1)
    inner = N + 1 - WALL_BAND
    residual = float(np.max(np.abs(bal[:inner, :inner])))
    grid = pi.reshape(N + 1, N + 1)
    wall = float(grid[inner:, :].sum() + grid[:inner, inner:].sum())
    return LatticeSolution(N, grid, "reflecting", residual, wall)
