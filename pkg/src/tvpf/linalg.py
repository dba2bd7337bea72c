"""Dense LU factorization with partial pivoting.

One factorization of the Jacobian at a time point is shared by the Newton
step and every derivative order, so the factor object is kept around and
``solve`` is called repeatedly.
"""

import numpy as np

from .errors import DimensionMismatch, SingularJacobian

PIVOT_TOL = 1e-12


class LUFactor:
    """PA = LU, stored packed in one array (unit lower triangle implied)."""

    def __init__(self, a, pivot_tol=PIVOT_TOL):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"LU needs a square matrix, got shape {a.shape}")
        n = a.shape[0]
        perm = np.arange(n)
        for k in range(n):
            p = k + int(np.argmax(np.abs(a[k:, k])))
            if abs(a[p, k]) < pivot_tol:
                raise SingularJacobian(f"pivot {a[p, k]:.3e} below {pivot_tol:g} in column {k}")
            if p != k:
                a[[k, p]] = a[[p, k]]
                perm[[k, p]] = perm[[p, k]]
            a[k + 1:, k] /= a[k, k]
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
        self.lu = a
        self.perm = perm
        self.n = n

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise DimensionMismatch(f"rhs length {rhs.shape[0]} != matrix size {self.n}")
        lu = self.lu
        y = rhs[self.perm].copy()
        for i in range(1, self.n):
            y[i] -= lu[i, :i] @ y[:i]
        for i in range(self.n - 1, -1, -1):
            y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
        return y

    def inverse(self):
        """Explicit inverse, one column solve per unit vector."""
        eye = np.eye(self.n)
        return np.column_stack([self.solve(eye[:, j]) for j in range(self.n)])


def solve_linear(matrix, rhs):
    """Solve ``matrix @ v = rhs`` by LU with partial pivoting."""
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != rhs.shape[0]:
        raise DimensionMismatch(f"cannot solve {matrix.shape} system with rhs {rhs.shape}")
    return LUFactor(matrix).solve(rhs)
