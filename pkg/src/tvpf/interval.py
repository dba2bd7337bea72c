"""Linear-time intervals and the time-varying voltage functions evaluated on them.

Within an interval all non-slack P and all PQ-bus Q injections are affine in
time. Two evaluators are provided:

* ``linear_tv``: first-order expansion from the interval start;
* ``combined_tv``: second-order expansions from both ends sharing the
  finite-difference second derivative ``(x1(t_e) - x1(t_0)) / T``, blended
  with weight ``alpha = (t - t_0) / T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .derivatives import SlopeVector, first_derivative
from .errors import DimensionMismatch, NonConvergence, TimeOutOfInterval
from .linalg import LUFactor
from .powerflow import SolverOptions, VoltageState, assemble_jacobian, solve_powerflow

log = logging.getLogger(__name__)

# float slack when checking t against the interval ends
_TIME_EPS = 1e-12


@dataclass(frozen=True)
class LinearTimeInterval:
    t_start: float
    t_end: float
    y_start: object  # InjectionTarget
    y_end: object

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise TimeOutOfInterval(f"interval end {self.t_end} must exceed start {self.t_start}")
        if len(self.y_start.stacked) != len(self.y_end.stacked):
            raise DimensionMismatch("interval endpoint targets have different layouts")

    @property
    def length(self):
        return self.t_end - self.t_start

    @property
    def slope(self):
        return SlopeVector.between(self.y_start, self.y_end, self.length)

    def check_time(self, t):
        if t < self.t_start - _TIME_EPS or t > self.t_end + _TIME_EPS:
            raise TimeOutOfInterval(f"t={t} outside [{self.t_start}, {self.t_end}]")

    def grid(self, points):
        """``points`` equidistant times including both ends."""
        times = self.t_start + self.length * np.arange(points) / (points - 1)
        times[-1] = self.t_end
        return times


def injections_at(interval, t):
    interval.check_time(t)
    if t == interval.t_start:
        return interval.y_start
    if t == interval.t_end:
        return interval.y_end
    slope = interval.slope
    dt = t - interval.t_start
    return interval.y_start.replace(p=interval.y_start.p + dt * slope.k_p,
                                    q=interval.y_start.q + dt * slope.k_q)


def linear_tv(x0, d1, t):
    """x(t) = x(t0) + (t - t0) x^(1)(t0)."""
    dt = t - x0.time
    if dt < -_TIME_EPS:
        raise TimeOutOfInterval(f"linear expansion from t0={x0.time} evaluated before it at t={t}")
    if dt > 1.0 + _TIME_EPS:
        log.warning("linear expansion over %.3g h; accuracy assumes steps under one hour", dt)
    return VoltageState.from_stacked(x0.stacked + dt * np.asarray(d1), time=t)


@dataclass(frozen=True)
class IntervalSolution:
    interval: LinearTimeInterval
    x_start: VoltageState
    x_end: VoltageState
    d1_start: np.ndarray
    d1_end: np.ndarray
    d2_bar: np.ndarray

    @classmethod
    def from_endpoints(cls, interval, x_start, x_end, d1_start, d1_end):
        d2_bar = (d1_end - d1_start) / interval.length
        return cls(interval, x_start, x_end, d1_start, d1_end, d2_bar)

    def reversed(self):
        """The same trajectory traversed backwards over the same time span."""
        iv = self.interval
        rev = LinearTimeInterval(iv.t_start, iv.t_end, iv.y_end, iv.y_start)
        return IntervalSolution.from_endpoints(
            rev,
            self.x_end.at_time(iv.t_start),
            self.x_start.at_time(iv.t_end),
            -self.d1_end,
            -self.d1_start,
        )


def build_interval_solution(net, interval, warm_start=None, options=None):
    """Solve both endpoints and form the first derivatives and shared second derivative."""
    options = options or SolverOptions()
    slope = interval.slope
    start = solve_powerflow(net, interval.y_start, _timed(warm_start, interval.t_start), options)
    x0 = start.state.at_time(interval.t_start)
    d1_0 = first_derivative(x0, slope, net)
    guess = linear_tv(x0, d1_0, interval.t_end)
    try:
        end = solve_powerflow(net, interval.y_end, guess, options)
    except NonConvergence as exc:
        exc.breakpoint = interval.t_end
        raise
    xe = end.state.at_time(interval.t_end)
    d1_e = first_derivative(xe, slope, net, lu=LUFactor(assemble_jacobian(xe, net)))
    return IntervalSolution.from_endpoints(interval, x0, xe, d1_0, d1_e)


def _timed(state, t):
    return None if state is None else state.at_time(t)


def combined_tv(sol, t):
    """Blend of the second-order expansions about both interval ends."""
    iv = sol.interval
    iv.check_time(t)
    dt0 = t - iv.t_start
    dte = t - iv.t_end
    alpha = dt0 / iv.length
    x_from_start = sol.x_start.stacked + dt0 * sol.d1_start + 0.5 * dt0 * dt0 * sol.d2_bar
    x_from_end = sol.x_end.stacked + dte * sol.d1_end + 0.5 * dte * dte * sol.d2_bar
    x = (1.0 - alpha) * x_from_start + alpha * x_from_end
    return VoltageState.from_stacked(x, time=t)
