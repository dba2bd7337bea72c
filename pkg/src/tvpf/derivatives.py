"""Time derivatives of the voltage state along a linear injection ramp.

Differentiating h(x(t)) = y(t) d times with dy/dt = k and d^2y/dt^2 = 0 gives

    J(x) x^(1) = k
    J(x) x^(d) = -sum_{j=1}^{d-1} C(d-1, j) J(x^(j)) x^(d-j),   d >= 2

where J(v) is the Jacobian assembly applied to v (valid because Jacobian
entries are linear in the state). The left matrix is the same for every order,
so one LU factorization serves the whole series.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .combinatorics import binomial
from .errors import DimensionMismatch, InvalidOrder, MissingLowerOrder
from .linalg import LUFactor
from .powerflow import assemble_jacobian, jacobian_from_vector

HOURS_PER_MINUTE = 1 / 60
HOURS_PER_SECOND = 1 / 3600


@dataclass(frozen=True)
class SlopeVector:
    """Injection slopes in p.u./hour; the |V|^2 rows of PV buses never move."""

    k_p: np.ndarray
    k_q: np.ndarray
    n_pv: int

    @property
    def stacked(self):
        return np.concatenate([self.k_p, self.k_q, np.zeros(self.n_pv)])

    @classmethod
    def between(cls, y_start, y_end, duration):
        return cls((y_end.p - y_start.p) / duration, (y_end.q - y_start.q) / duration,
                   len(y_start.pv_vsq))

    @classmethod
    def zero(cls, net):
        s = net.sets
        return cls(np.zeros(len(s.nonslack)), np.zeros(len(s.pq)), len(s.pv))

    def __mul__(self, c):
        return SlopeVector(self.k_p * c, self.k_q * c, self.n_pv)

    __rmul__ = __mul__

    def per_minute(self):
        return self * HOURS_PER_MINUTE

    def per_second(self):
        return self * HOURS_PER_SECOND


@dataclass(frozen=True)
class DerivativeSeries:
    """derivatives[d - 1] is x^(d) in full bus-stacked layout (p.u./hour^d)."""

    derivatives: tuple
    time: float = 0.0

    @property
    def order_max(self):
        return len(self.derivatives)

    def __getitem__(self, d):
        if d < 1 or d > len(self.derivatives):
            raise MissingLowerOrder(f"order {d} not in series of length {len(self.derivatives)}")
        return self.derivatives[d - 1]

    def to_csv(self, bus_ids):
        n = len(bus_ids)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "bus", "v_real_deriv", "v_imag_deriv"])
        for d, x in enumerate(self.derivatives, start=1):
            for i, bus in enumerate(bus_ids):
                w.writerow([d, bus, repr(float(x[i])), repr(float(x[n + i]))])
        return buf.getvalue()


def _expand(net, u):
    """Unknown-layout vector -> full layout with zero slack entries."""
    ns = net.sets.nonslack
    m = len(ns)
    out = np.zeros(2 * net.n)
    out[ns] = u[:m]
    out[net.n + ns] = u[m:]
    return out


def _restrict(net, x):
    ns = net.sets.nonslack
    return np.concatenate([x[ns], x[net.n + ns]])


def jacobian_at_vector(v, net):
    return jacobian_from_vector(v, net)


def first_derivative(state, slope, net, lu=None):
    """x^(1) at a converged state, in full layout."""
    k = slope.stacked
    if k.shape[0] != net.sets.n_unknowns:
        raise DimensionMismatch(f"slope length {k.shape[0]} != {net.sets.n_unknowns} unknowns")
    if lu is None:
        lu = LUFactor(assemble_jacobian(state, net))
    return _expand(net, lu.solve(k))


def derivative_rhs(d, lower, net):
    """b_d for d >= 2 from orders 1..d-1 (a sequence or DerivativeSeries)."""
    if d < 2:
        raise InvalidOrder(f"derivative_rhs needs d >= 2, got {d}; b_1 is the slope")
    lower = list(lower.derivatives if isinstance(lower, DerivativeSeries) else lower)
    if len(lower) < d - 1:
        raise MissingLowerOrder(f"order {d} needs orders 1..{d - 1}, got {len(lower)}")
    b = np.zeros(net.sets.n_unknowns)
    for j in range(1, d):
        b -= binomial(d - 1, j) * (jacobian_from_vector(lower[j - 1], net) @ _restrict(net, lower[d - j - 1]))
    return b


def derivative_series(state, slope, net, order_max=8, lu=None):
    if order_max < 1:
        raise InvalidOrder(f"order_max must be >= 1, got {order_max}")
    if lu is None:
        lu = LUFactor(assemble_jacobian(state, net))
    derivs = [first_derivative(state, slope, net, lu=lu)]
    for d in range(2, order_max + 1):
        derivs.append(_expand(net, lu.solve(derivative_rhs(d, derivs, net))))
    return DerivativeSeries(tuple(derivs), state.time)
