"""Thomas algorithm for tridiagonal systems.

Row ``i`` of the system reads ``lower[i]*y[i-1] + diag[i]*y[i] + upper[i]*y[i+1] = rhs[i]``;
``lower[0]`` and ``upper[-1]`` are ignored.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, SolverError

PIVOT_TOL = 1e-14


class ThomasFactor:
    """Forward-elimination factors of a fixed tridiagonal matrix.

    Factoring once lets repeated solves with new right-hand sides skip the
    pivot computation, which matters when the matrix is constant in time.
    """

    def __init__(self, lower, diag, upper):
        lower = np.asarray(lower, dtype=float)
        diag = np.asarray(diag, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = diag.shape[0]
        if n < 2 or lower.shape != (n,) or upper.shape != (n,):
            raise ContractError("tridiagonal bands must be 1-D of equal length >= 2")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(diag)) and np.all(np.isfinite(upper))):
            raise ContractError("tridiagonal bands contain non-finite entries")

        row_scale = np.abs(diag) + np.abs(upper)
        row_scale[1:] += np.abs(lower[1:])
        row_scale[-1] -= abs(upper[-1])

        lo = lower.tolist()
        up = upper.tolist()
        dg = diag.tolist()
        scale = row_scale.tolist()
        pivots = [0.0] * n
        ratios = [0.0] * n  # multiplier applied to the previous row during elimination
        cprime = [0.0] * n
        prev_c = 0.0
        for i in range(n):
            l = lo[i] if i else 0.0
            piv = dg[i] - l * prev_c
            if abs(piv) < PIVOT_TOL * scale[i] or scale[i] == 0.0:
                raise SolverError(f"near-zero pivot {piv:.3e}", index=i)
            pivots[i] = piv
            ratios[i] = l
            prev_c = (up[i] / piv) if i < n - 1 else 0.0
            cprime[i] = prev_c
        self.size = n
        self._pivots = pivots
        self._lower = ratios
        self._cprime = cprime

    def solve(self, rhs) -> np.ndarray:
        d = np.asarray(rhs, dtype=float)
        if d.shape != (self.size,):
            raise ContractError(f"rhs length {d.shape} does not match system size {self.size}")
        d = d.tolist()
        piv, lo, cp = self._pivots, self._lower, self._cprime
        n = self.size
        y = [0.0] * n
        prev = 0.0
        for i in range(n):
            prev = (d[i] - lo[i] * prev) / piv[i]
            y[i] = prev
        for i in range(n - 2, -1, -1):
            y[i] -= cp[i] * y[i + 1]
        return np.array(y)


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution."""
    return ThomasFactor(lower, diag, upper).solve(rhs)
