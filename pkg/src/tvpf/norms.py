"""Norms, condition numbers and derivative-norm bounds.

The bound on the d-th derivative is ``(2d-3)!! rho^(d-1) ||x1||^d`` with
``rho = ||J^-1|| ||J||``. Scaling rho by a coefficient alpha in (0, 1) turns
the bound into an approximate equality; alpha is fitted so the approximation
is exact at d = 2. The implied adjacent-order ratio ``(2d-3) alpha rho ||x1||``
is affine in d, and the order where it crosses 1 is the bottom of the norm
sequence's "U".
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .combinatorics import double_factorial
from .errors import EmptyInput, InvalidOrder, ZeroFirstDerivative
from .linalg import LUFactor
from .powerflow import assemble_jacobian, jacobian_from_vector

NORMS = {"1": 1, "2": 2, "inf": np.inf}

POWER_ITERATIONS = 200
POWER_RTOL = 1e-10
ALPHA_CLAMP = 1e-6


def parse_norm(p):
    if isinstance(p, str):
        try:
            return NORMS[p.lower()]
        except KeyError:
            raise InvalidOrder(f"norm must be one of 1, 2, inf; got {p!r}") from None
    if p in (1, 2) or p == np.inf:
        return p
    raise InvalidOrder(f"norm must be one of 1, 2, inf; got {p!r}")


def vector_norm(v, p=2):
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise EmptyInput("norm of an empty vector")
    p = parse_norm(p)
    a = np.abs(v)
    if p == 1:
        return float(a.sum())
    if p == 2:
        scale = a.max()
        return 0.0 if scale == 0 else float(scale * np.sqrt(np.sum((a / scale) ** 2)))
    return float(a.max())


def spectral_norm(m, iterations=POWER_ITERATIONS, rtol=POWER_RTOL):
    """Largest singular value by power iteration on M^T M."""
    gram = m.T @ m
    v = np.ones(gram.shape[1]) / np.sqrt(gram.shape[1])
    # a deterministic start that is unlikely to be orthogonal to the top vector
    v = v + 1e-3 * np.sin(np.arange(1, gram.shape[1] + 1))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = gram @ v
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if lam_new > 0 and abs(lam_new - lam) <= rtol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def matrix_norm(m, p=2):
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        raise EmptyInput("norm of an empty matrix")
    p = parse_norm(p)
    if p == 1:
        return float(np.abs(m).sum(axis=0).max())
    if p == np.inf:
        return float(np.abs(m).sum(axis=1).max())
    return spectral_norm(m)


def condition_number(jac, p=2):
    """||J^-1|| ||J|| with the inverse formed explicitly from an LU factorization."""
    inv = LUFactor(jac).inverse()
    return matrix_norm(inv, p) * matrix_norm(jac, p)


def proposition1_check(state, series, net, p=2):
    """Per order k: (||J(x^(k))||, ||J(x)|| ||x^(k)||, ratio); reported, never asserted."""
    j_norm = matrix_norm(assemble_jacobian(state, net), p)
    rows = []
    for xk in series.derivatives:
        lhs = matrix_norm(jacobian_from_vector(xk, net), p)
        rhs = j_norm * vector_norm(xk, p)
        rows.append((lhs, rhs, lhs / rhs if rhs > 0 else 0.0))
    return rows


def proposition2_bound(d, rho, x1_norm):
    if d < 2:
        raise InvalidOrder(f"the derivative bound starts at d = 2, got {d}")
    return double_factorial(2 * d - 3) * rho ** (d - 1) * x1_norm ** d


def approx_norm(d, rho_corrected, x1_norm):
    """The bound with rho replaced by the corrected condition number."""
    return proposition2_bound(d, rho_corrected, x1_norm)


def fit_alpha(series, rho, p=2):
    if series.order_max < 2:
        raise InvalidOrder("fitting alpha needs derivatives up to order 2")
    n1 = vector_norm(series[1], p)
    if n1 == 0.0:
        raise ZeroFirstDerivative("first derivative is zero; alpha is undefined")
    alpha = vector_norm(series[2], p) / (rho * n1 * n1)
    return min(max(alpha, ALPHA_CLAMP), 1.0 - ALPHA_CLAMP)


def gamma_and_critical(rho_corrected, x1_norm, order_max):
    """gamma_d for d = 2..D and the largest d with gamma_d <= 1 (None if gamma_2 > 1)."""
    if order_max < 2:
        raise InvalidOrder(f"order_max must be >= 2, got {order_max}")
    c = rho_corrected * x1_norm
    gamma = [(2 * d - 3) * c for d in range(2, order_max + 1)]
    below = [d for d, g in zip(range(2, order_max + 1), gamma) if g <= 1.0]
    return gamma, (max(below) if below else None)


def measured_minimum(norms):
    """1-based order of the smallest entry of a norm sequence."""
    return int(np.argmin(norms)) + 1


def is_u_shaped(norms):
    """Strictly decreasing to an interior minimum, strictly increasing after it."""
    norms = list(norms)
    k = int(np.argmin(norms))
    if k == 0 or k == len(norms) - 1:
        return False
    down = all(a > b for a, b in zip(norms[:k], norms[1:k + 1]))
    up = all(a < b for a, b in zip(norms[k:], norms[k + 1:]))
    return down and up


@dataclass
class NormReport:
    p: str
    derivative_norms: list
    rho: float
    rho_corrected: float
    alpha_t: float | None
    bounds: list  # orders 2..D
    approx: list  # orders 2..D
    gamma: list  # orders 2..D
    critical_order: int | None
    measured_min_order: int
    jacobian_norm: float
    inverse_norm: float

    def rows(self):
        out = []
        for d, norm in enumerate(self.derivative_norms, start=1):
            if d == 1:
                out.append((d, norm, None, None, None))
            else:
                out.append((d, norm, self.bounds[d - 2], self.approx[d - 2], self.gamma[d - 2]))
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "measured_norm", "prop2_bound", "eq49_approx", "gamma"])
        for row in self.rows():
            w.writerow(["" if v is None else (v if isinstance(v, int) else repr(float(v))) for v in row])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def norm_report(state, series, net, p=2):
    """Condition number, fitted alpha, bounds and gamma ratios at one time point."""
    p_key = {1: "1", 2: "2", np.inf: "inf"}[parse_norm(p)]
    p = parse_norm(p)
    jac = assemble_jacobian(state, net)
    inv = LUFactor(jac).inverse()
    j_norm, inv_norm = matrix_norm(jac, p), matrix_norm(inv, p)
    rho = j_norm * inv_norm
    norms = [vector_norm(x, p) for x in series.derivatives]
    x1 = norms[0]
    D = series.order_max
    if x1 == 0.0:
        # constant injections: every derivative vanishes and the fit is undefined
        zeros = [0.0] * (D - 1)
        return NormReport(p_key, norms, rho, 0.0, None, zeros, zeros, zeros, None, 1, j_norm, inv_norm)
    alpha = fit_alpha(series, rho, p)
    rho_c = alpha * rho
    bounds = [proposition2_bound(d, rho, x1) for d in range(2, D + 1)]
    approx = [approx_norm(d, rho_c, x1) for d in range(2, D + 1)]
    gamma, d_cr = gamma_and_critical(rho_c, x1, D)
    return NormReport(p_key, norms, rho, rho_c, alpha, bounds, approx, gamma, d_cr,
                      measured_minimum(norms), j_norm, inv_norm)
