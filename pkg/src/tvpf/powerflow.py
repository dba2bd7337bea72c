"""AC power flow in rectangular coordinates.

Layouts (fixed throughout the package):

* full state ``x = [v_real (n); v_imag (n)]`` in case bus order;
* unknowns ``[v_real over non-slack; v_imag over non-slack]``;
* residual / target rows ``[P over non-slack; Q over PQ; |V|^2 over PV]``.

Every Jacobian entry is linear in the state it is evaluated at, which is what
lets the derivative recursion evaluate the same routine at derivative vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .case import BusType, build_ybus
from .errors import DimensionMismatch, NonConvergence
from .linalg import LUFactor, solve_linear  # noqa: F401


@dataclass(frozen=True)
class BusSets:
    n: int
    slack: int
    pv: np.ndarray
    pq: np.ndarray
    nonslack: np.ndarray

    @classmethod
    def from_case(cls, case):
        types = [b.bus_type for b in case.buses]
        idx = np.arange(len(types))
        return cls(
            n=len(types),
            slack=case.slack_index,
            pv=idx[[t is BusType.PV for t in types]],
            pq=idx[[t is BusType.PQ for t in types]],
            nonslack=idx[[t is not BusType.SLACK for t in types]],
        )

    @property
    def n_unknowns(self):
        return 2 * len(self.nonslack)


class Network:
    """A case together with its admittance matrix and bus index sets."""

    def __init__(self, case):
        self.case = case
        self.ybus = build_ybus(case)
        self.G = self.ybus.real.copy()
        self.B = self.ybus.imag.copy()
        self.sets = BusSets.from_case(case)
        slack = case.buses[self.sets.slack]
        self.slack_voltage = slack.v_setpoint * complex(
            math.cos(slack.v_angle_setpoint), math.sin(slack.v_angle_setpoint)
        )

    @property
    def n(self):
        return self.sets.n

    def bus_ids(self):
        return [b.id for b in self.case.buses]


@dataclass(frozen=True)
class VoltageState:
    v_real: np.ndarray
    v_imag: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if np.shape(self.v_real) != np.shape(self.v_imag):
            raise DimensionMismatch("v_real and v_imag lengths differ")

    @classmethod
    def from_stacked(cls, x, time=0.0):
        x = np.asarray(x, dtype=float)
        n = x.shape[0] // 2
        return cls(x[:n].copy(), x[n:].copy(), time)

    @property
    def stacked(self):
        return np.concatenate([self.v_real, self.v_imag])

    @property
    def complex(self):
        return self.v_real + 1j * self.v_imag

    @property
    def magnitude(self):
        return np.hypot(self.v_real, self.v_imag)

    def at_time(self, time):
        return VoltageState(self.v_real, self.v_imag, time)


@dataclass(frozen=True)
class InjectionTarget:
    """Specified injections: P over non-slack, Q over PQ, |V|^2 over PV buses."""

    p: np.ndarray
    q: np.ndarray
    pv_vsq: np.ndarray

    @classmethod
    def from_case(cls, net):
        buses = net.case.buses
        s = net.sets
        return cls(
            p=np.array([buses[i].p_injection for i in s.nonslack]),
            q=np.array([buses[i].q_injection for i in s.pq]),
            pv_vsq=np.array([buses[i].v_setpoint ** 2 for i in s.pv]),
        )

    @property
    def stacked(self):
        return np.concatenate([self.p, self.q, self.pv_vsq])

    def replace(self, p=None, q=None):
        return InjectionTarget(
            self.p if p is None else np.asarray(p, dtype=float),
            self.q if q is None else np.asarray(q, dtype=float),
            self.pv_vsq,
        )


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 30
    divergence: float = 1e6


@dataclass(frozen=True)
class PowerFlowSolution:
    state: VoltageState
    iterations: int
    final_mismatch: float
    converged: bool
    bus_ids: list = field(default_factory=list, compare=False)

    def to_dict(self):
        st = self.state
        return {
            "time_hours": st.time,
            "iterations": self.iterations,
            "final_mismatch": self.final_mismatch,
            "converged": self.converged,
            "buses": [
                {
                    "bus": bus,
                    "v_real": float(st.v_real[i]),
                    "v_imag": float(st.v_imag[i]),
                    "magnitude": float(st.magnitude[i]),
                    "angle_deg": math.degrees(math.atan2(st.v_imag[i], st.v_real[i])),
                }
                for i, bus in enumerate(self.bus_ids)
            ],
        }


def _check_state(state, net):
    if len(state.v_real) != net.n:
        raise DimensionMismatch(f"state has {len(state.v_real)} buses, network has {net.n}")


def _check_target(target, net):
    s = net.sets
    if (len(target.p), len(target.q), len(target.pv_vsq)) != (len(s.nonslack), len(s.pq), len(s.pv)):
        raise DimensionMismatch(
            f"target sizes (p={len(target.p)}, q={len(target.q)}, pv={len(target.pv_vsq)}) "
            f"do not match bus sets ({len(s.nonslack)}, {len(s.pq)}, {len(s.pv)})"
        )


def injections(state, net):
    """Computed complex power injection S = V conj(Y V) at every bus."""
    v = state.complex
    return v * np.conj(net.ybus @ v)


def power_equations(state, net):
    """h(x) in residual row order."""
    _check_state(state, net)
    s = net.sets
    inj = injections(state, net)
    vsq = state.v_real[s.pv] ** 2 + state.v_imag[s.pv] ** 2
    return np.concatenate([inj.real[s.nonslack], inj.imag[s.pq], vsq])


def power_mismatch(state, target, net):
    """Residual h(x) - y."""
    _check_target(target, net)
    return power_equations(state, net) - target.stacked


def jacobian_from_vector(x, net):
    """Assemble dh/dx (restricted to unknown columns) with ``x`` as the state.

    ``x`` is any full-layout vector of length 2n. Entries are linear in ``x``.
    """
    x = np.asarray(x, dtype=float)
    n = net.n
    if x.shape != (2 * n,):
        raise DimensionMismatch(f"expected vector of length {2 * n}, got {x.shape}")
    s = net.sets
    e, f = x[:n], x[n:]
    G, B = net.G, net.B
    i_re = G @ e - B @ f
    i_im = G @ f + B @ e
    ns = s.nonslack

    def block(rows):
        Gr, Br = G[np.ix_(rows, ns)], B[np.ix_(rows, ns)]
        er, fr = e[rows, None], f[rows, None]
        dP_de = er * Gr + fr * Br
        dP_df = fr * Gr - er * Br
        dQ_de = fr * Gr - er * Br
        dQ_df = -fr * Br - er * Gr
        return dP_de, dP_df, dQ_de, dQ_df

    # diagonal terms: position of each row bus among the unknown columns
    col_of = np.full(n, -1)
    col_of[ns] = np.arange(len(ns))
    m_ns = len(ns)

    dP_de, dP_df, _, _ = block(ns)
    rows_p = np.arange(m_ns)
    dP_de[rows_p, col_of[ns]] += i_re[ns]
    dP_df[rows_p, col_of[ns]] += i_im[ns]

    pq = s.pq
    _, _, dQ_de, dQ_df = block(pq)
    rows_q = np.arange(len(pq))
    dQ_de[rows_q, col_of[pq]] -= i_im[pq]
    dQ_df[rows_q, col_of[pq]] += i_re[pq]

    pv = s.pv
    dV_de = np.zeros((len(pv), m_ns))
    dV_df = np.zeros((len(pv), m_ns))
    rows_v = np.arange(len(pv))
    dV_de[rows_v, col_of[pv]] = 2.0 * e[pv]
    dV_df[rows_v, col_of[pv]] = 2.0 * f[pv]

    return np.block([[dP_de, dP_df], [dQ_de, dQ_df], [dV_de, dV_df]])


def assemble_jacobian(state, net):
    _check_state(state, net)
    return jacobian_from_vector(state.stacked, net)


def flat_start(net, time=0.0, literal=False):
    """Flat start: non-slack buses at 1 + j0 (PV at their setpoint magnitude).

    ``literal=True`` puts non-slack buses at 0 + j1 instead; the slack bus is
    always at its setpoint.
    """
    n = net.n
    s = net.sets
    v = np.ones(n, dtype=complex)
    if literal:
        v[:] = 1j
    else:
        for i in s.pv:
            v[i] = net.case.buses[i].v_setpoint
    v[s.slack] = net.slack_voltage
    return VoltageState(v.real.copy(), v.imag.copy(), time)


def _unknowns(state, net):
    ns = net.sets.nonslack
    return np.concatenate([state.v_real[ns], state.v_imag[ns]])


def _with_unknowns(state, u, net):
    ns = net.sets.nonslack
    m = len(ns)
    v_real = state.v_real.copy()
    v_imag = state.v_imag.copy()
    v_real[ns] = u[:m]
    v_imag[ns] = u[m:]
    return VoltageState(v_real, v_imag, state.time)


def solve_powerflow(net, target, initial=None, options=None):
    """Plain Newton-Raphson; raises NonConvergence instead of returning unconverged."""
    options = options or SolverOptions()
    if initial is None:
        initial = flat_start(net)
    _check_state(initial, net)
    _check_target(target, net)
    slack = net.sets.slack
    v_real = np.array(initial.v_real, dtype=float)
    v_imag = np.array(initial.v_imag, dtype=float)
    v_real[slack] = net.slack_voltage.real
    v_imag[slack] = net.slack_voltage.imag
    state = VoltageState(v_real, v_imag, initial.time)

    y = target.stacked
    for it in range(options.max_iter + 1):
        residual = power_equations(state, net) - y
        mis = float(np.max(np.abs(residual))) if residual.size else 0.0
        if not np.isfinite(mis) or mis > options.divergence:
            raise NonConvergence(
                f"power flow diverged (mismatch {mis:.3e}) after {it} iterations",
                iterations=it, mismatch=mis,
            )
        if mis <= options.tol:
            return PowerFlowSolution(state, it, mis, True, net.bus_ids())
        if it == options.max_iter:
            break
        lu = LUFactor(assemble_jacobian(state, net))
        step = lu.solve(residual)
        state = _with_unknowns(state, _unknowns(state, net) - step, net)
    raise NonConvergence(
        f"power flow did not converge in {options.max_iter} iterations (mismatch {mis:.3e})",
        iterations=options.max_iter, mismatch=mis,
    )
