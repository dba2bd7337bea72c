"""Multi-interval time-varying power flow over a piecewise-linear schedule.

The pipeline:

1. ``partition`` splits the schedule into linear-time intervals;
2. ``solve_discrete_points`` runs Newton at every breakpoint, each one
   warm-started by the linear expansion from the previous breakpoint;
3. ``run_time_varying`` builds the per-interval solutions and evaluates the
   combined function on an equidistant grid;
4. ``branch_flows`` derives branch currents and powers from any state.

``validate`` compares the trajectory against exact Newton solves at every
grid point.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .derivatives import first_derivative
from .errors import (
    InfeasibleScenario,
    LayoutMismatch,
    NonConvergence,
    NonMonotonicTimes,
)
from .interval import IntervalSolution, LinearTimeInterval, combined_tv, injections_at, linear_tv
from .linalg import LUFactor
from .powerflow import (
    InjectionTarget,
    SolverOptions,
    assemble_jacobian,
    flat_start,
    solve_powerflow,
)

log = logging.getLogger(__name__)


def _num(x):
    return repr(float(x))


# -- schedules ------------------------------------------------------------------

@dataclass
class InjectionSchedule:
    times: list
    targets: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        if len(self.times) != len(self.targets):
            raise LayoutMismatch("schedule needs one target per breakpoint")

    def __len__(self):
        return len(self.times)

    @classmethod
    def constant(cls, target, hours=24, step=1.0):
        n = int(round(hours / step))
        return cls([i * step for i in range(n + 1)], [target] * (n + 1))

    def refined(self, factor):
        """Same piecewise-linear schedule with every interval split into ``factor`` parts."""
        times, targets = [self.times[0]], [self.targets[0]]
        for (t0, y0), (t1, y1) in zip(zip(self.times, self.targets), zip(self.times[1:], self.targets[1:])):
            for j in range(1, factor):
                w = j / factor
                times.append(t0 + w * (t1 - t0))
                targets.append(y0.replace(p=y0.p + w * (y1.p - y0.p), q=y0.q + w * (y1.q - y0.q)))
            times.append(t1)
            targets.append(y1)
        return InjectionSchedule(times, targets, dict(self.metadata, refined=factor))

    def to_csv(self, net):
        s = net.sets
        ids = net.bus_ids()
        pq_pos = {int(i): k for k, i in enumerate(s.pq)}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_hours", "bus", "p_pu", "q_pu"])
        for t, y in zip(self.times, self.targets):
            for k, i in enumerate(s.nonslack):
                q = y.q[pq_pos[int(i)]] if int(i) in pq_pos else 0.0
                w.writerow([_num(t), ids[i], _num(y.p[k]), _num(q)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, net):
        s = net.sets
        ids = net.bus_ids()
        pos = {bus: i for i, bus in enumerate(ids)}
        nonslack_pos = {int(i): k for k, i in enumerate(s.nonslack)}
        pq_pos = {int(i): k for k, i in enumerate(s.pq)}
        pv = {int(i) for i in s.pv}
        base = InjectionTarget.from_case(net)

        reader = csv.DictReader(io.StringIO(text))
        expected = ["time_hours", "bus", "p_pu", "q_pu"]
        if reader.fieldnames != expected:
            raise LayoutMismatch(f"schedule header must be {','.join(expected)}, got {reader.fieldnames}")
        rows = {}
        order = []
        for lineno, row in enumerate(reader, start=2):
            try:
                t = float(row["time_hours"])
                bus = int(row["bus"])
                p = float(row["p_pu"])
                q = float(row["q_pu"]) if row["q_pu"] not in ("", None) else 0.0
            except (TypeError, ValueError):
                raise LayoutMismatch(f"line {lineno}: unreadable schedule row {row}") from None
            if bus not in pos:
                raise LayoutMismatch(f"line {lineno}: unknown bus {bus}")
            i = pos[bus]
            if i == s.slack:
                log.warning("line %d: slack bus %d row ignored", lineno, bus)
                continue
            if t not in rows:
                if order and t <= order[-1]:
                    raise NonMonotonicTimes(f"line {lineno}: time {t} after {order[-1]}")
                rows[t] = {}
                order.append(t)
            if i in rows[t]:
                raise LayoutMismatch(f"line {lineno}: duplicate row for bus {bus} at t={t}")
            if i in pv and q != 0.0:
                log.warning("line %d: q value for PV bus %d ignored", lineno, bus)
            rows[t][i] = (p, q)

        targets = []
        for t in order:
            got = rows[t]
            if len(got) != len(s.nonslack):
                missing = sorted(ids[i] for i in s.nonslack if int(i) not in got)
                raise LayoutMismatch(f"t={t}: missing rows for buses {missing}")
            p = np.zeros(len(s.nonslack))
            q = np.zeros(len(s.pq))
            for i, (pi, qi) in got.items():
                p[nonslack_pos[i]] = pi
                if i in pq_pos:
                    q[pq_pos[i]] = qi
            targets.append(base.replace(p=p, q=q))
        return cls(order, targets)


def partition(schedule):
    """Linear-time intervals between consecutive breakpoints."""
    if len(schedule) < 2:
        raise LayoutMismatch("a schedule needs at least two breakpoints")
    layout = tuple(len(a) for a in (schedule.targets[0].p, schedule.targets[0].q, schedule.targets[0].pv_vsq))
    for y in schedule.targets:
        if tuple(len(a) for a in (y.p, y.q, y.pv_vsq)) != layout:
            raise LayoutMismatch("schedule targets do not share one bus layout")
    for a, b in zip(schedule.times, schedule.times[1:]):
        if not b > a:
            raise NonMonotonicTimes(f"breakpoint times must increase strictly ({a} then {b})")
    return [
        LinearTimeInterval(t0, t1, y0, y1)
        for t0, t1, y0, y1 in zip(schedule.times, schedule.times[1:], schedule.targets, schedule.targets[1:])
    ]


def base_total_demand(net):
    """Sum of positive net bus demand in the case (p.u.)."""
    return float(sum(max(b.p_demand, 0.0) for b in net.case.buses))


def total_variation(schedule, reference=None):
    """Sum over intervals and non-slack buses of |dP|, divided by ``reference``.

    ``reference`` defaults to sum |P(t0)| over the non-slack buses.
    """
    p = np.array([y.p for y in schedule.targets])
    base = np.abs(p[0]).sum() if reference is None else reference
    return float(np.abs(np.diff(p, axis=0)).sum() / base) if base > 0 else math.inf


# -- discrete points ------------------------------------------------------------

@dataclass
class _Chain:
    solutions: list
    lus: list


def _solve_chain(net, intervals, options, warm=True, literal_flat=False):
    solutions, lus = [], []
    guess = flat_start(net, intervals[0].t_start, literal=literal_flat)
    targets = [intervals[0].y_start] + [iv.y_end for iv in intervals]
    times = [intervals[0].t_start] + [iv.t_end for iv in intervals]
    for l, (t, y) in enumerate(zip(times, targets)):
        if l > 0 and not warm:
            guess = flat_start(net, t)
        try:
            sol = solve_powerflow(net, y, guess, options)
        except NonConvergence as exc:
            exc.breakpoint = l
            exc.args = (f"breakpoint {l} (t={t:g} h): {exc.args[0]}",)
            raise
        state = sol.state.at_time(t)
        lu = LUFactor(assemble_jacobian(state, net))
        solutions.append(sol)
        lus.append(lu)
        if warm and l < len(intervals):
            d1 = first_derivative(state, intervals[l].slope, net, lu=lu)
            guess = linear_tv(state, d1, intervals[l].t_end)
    return _Chain(solutions, lus)


def solve_discrete_points(net, intervals, options=None, warm=True, literal_flat=False):
    """Newton solutions at every breakpoint (flat start only at the first)."""
    return _solve_chain(net, intervals, options or SolverOptions(), warm, literal_flat).solutions


# -- trajectory -------------------------------------------------------------------

@dataclass
class Trajectory:
    interval_solutions: list
    sample_grid: int
    samples: list  # samples[l][j]: VoltageState at grid point j of interval l
    breakpoint_solutions: list
    bus_ids: list

    @property
    def times(self):
        return [[s.time for s in row] for row in self.samples]

    def unique_samples(self):
        """Samples with shared interval endpoints listed once."""
        out = list(self.samples[0])
        for row in self.samples[1:]:
            out.extend(row[1:])
        return out

    def linear_samples(self):
        return [
            [linear_tv(sol.x_start, sol.d1_start, s.time) for s in row]
            for sol, row in zip(self.interval_solutions, self.samples)
        ]

    def to_csv(self, exact=None, include_linear=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_hours", "bus", "v_real", "v_imag", "v_mag", "method"])
        blocks = [("combined", self.samples)]
        if include_linear:
            blocks.append(("linear", self.linear_samples()))
        if exact is not None:
            blocks.append(("newton", exact))
        for method, rows in blocks:
            for l, row in enumerate(rows):
                for j, st in enumerate(row):
                    if l > 0 and j == 0:
                        continue
                    if st is None:
                        continue
                    mag = st.magnitude
                    for i, bus in enumerate(self.bus_ids):
                        w.writerow([_num(st.time), bus, _num(st.v_real[i]),
                                    _num(st.v_imag[i]), _num(mag[i]), method])
        return buf.getvalue()


def run_time_varying(net, schedule, points_per_interval=11, options=None, literal_flat=False):
    if points_per_interval < 2:
        raise LayoutMismatch("points_per_interval must be at least 2")
    intervals = partition(schedule)
    chain = _solve_chain(net, intervals, options or SolverOptions(), literal_flat=literal_flat)
    states = [sol.state.at_time(t) for sol, t in zip(chain.solutions, schedule.times)]
    interval_solutions, samples = [], []
    for l, iv in enumerate(intervals):
        slope = iv.slope
        # left and right derivatives at a breakpoint differ when the slope changes
        d1_start = first_derivative(states[l], slope, net, lu=chain.lus[l])
        d1_end = first_derivative(states[l + 1], slope, net, lu=chain.lus[l + 1])
        sol = IntervalSolution.from_endpoints(iv, states[l], states[l + 1], d1_start, d1_end)
        interval_solutions.append(sol)
        samples.append([combined_tv(sol, t) for t in iv.grid(points_per_interval)])
    return Trajectory(interval_solutions, points_per_interval, samples, chain.solutions, net.bus_ids())


# -- branch quantities ----------------------------------------------------------------

@dataclass(frozen=True)
class BranchFlow:
    index: int
    from_bus: int
    to_bus: int
    s_from: complex
    s_to: complex
    i_from: complex
    i_to: complex
    time: float


def branch_flows(net, state):
    v = state.complex
    out = []
    for k, br in enumerate(net.case.branches):
        f, t = net.case.index_of(br.from_bus), net.case.index_of(br.to_bus)
        yff, yft, ytf, ytt = br.admittances()
        i_f = yff * v[f] + yft * v[t]
        i_t = ytf * v[f] + ytt * v[t]
        out.append(BranchFlow(k, br.from_bus, br.to_bus, v[f] * np.conj(i_f), v[t] * np.conj(i_t),
                              i_f, i_t, state.time))
    return out


def branch_flows_csv(flows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_hours", "branch", "from_bus", "to_bus", "p_from", "q_from", "p_to", "q_to",
                "i_from_mag", "i_to_mag"])
    for fl in flows:
        w.writerow([_num(fl.time), fl.index, fl.from_bus, fl.to_bus,
                    _num(fl.s_from.real), _num(fl.s_from.imag), _num(fl.s_to.real), _num(fl.s_to.imag),
                    _num(abs(fl.i_from)), _num(abs(fl.i_to))])
    return buf.getvalue()


# -- validation ---------------------------------------------------------------------

@dataclass
class IntervalError:
    interval: int
    max_err_real: float
    max_err_imag: float
    argmax_bus: int
    argmax_time: float
    count: int

    @property
    def max_err(self):
        return max(self.max_err_real, self.max_err_imag)


@dataclass
class ErrorReport:
    method: str
    intervals: list
    err_real: list  # per interval: array (points, n)
    err_imag: list
    failed: list = field(default_factory=list)  # (interval, time) of reference solves that diverged

    @property
    def global_max(self):
        return max(iv.max_err for iv in self.intervals)

    @property
    def total_comparisons(self):
        """Distinct (bus, time) pairs compared; shared interval endpoints count once."""
        n = self.err_real[0].shape[1]
        points = sum(e.shape[0] for e in self.err_real) - (len(self.err_real) - 1)
        return n * points - n * len(self.failed)

    def node_max(self):
        """Per-bus maximum error over the whole horizon."""
        stack = np.concatenate([np.maximum(r, i) for r, i in zip(self.err_real, self.err_imag)])
        return np.nanmax(stack, axis=0)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["interval", "max_err_real", "max_err_imag", "argmax_bus", "argmax_time"])
        for iv in self.intervals:
            w.writerow([iv.interval, _num(iv.max_err_real), _num(iv.max_err_imag), iv.argmax_bus,
                        _num(iv.argmax_time)])
        return buf.getvalue()

    def summary(self):
        worst = max(self.intervals, key=lambda iv: iv.max_err)
        return {
            "method": self.method,
            "global_max": self.global_max,
            "worst_interval": worst.interval,
            "worst_bus": worst.argmax_bus,
            "worst_time": worst.argmax_time,
            "intervals": len(self.intervals),
            "comparisons_per_interval": self.intervals[0].count,
            "total_comparisons": self.total_comparisons,
            "failed_samples": [{"interval": l, "time_hours": t} for l, t in self.failed],
        }


def exact_samples(net, trajectory, options=None):
    """Newton solution at every grid time, warm-started from the approximation.

    Diverging reference solves are returned as ``None`` and logged.
    """
    options = options or SolverOptions()
    out = []
    for l, row in enumerate(trajectory.samples):
        iv = trajectory.interval_solutions[l].interval
        exact_row = []
        for st in row:
            try:
                sol = solve_powerflow(net, injections_at(iv, st.time), st, options)
                exact_row.append(sol.state.at_time(st.time))
            except NonConvergence as exc:
                log.warning("reference solve failed in interval %d at t=%g: %s", l, st.time, exc)
                exact_row.append(None)
        out.append(exact_row)
    return out


def error_report(trajectory, exact, method="combined"):
    approx = trajectory.samples if method == "combined" else trajectory.linear_samples()
    ids = trajectory.bus_ids
    intervals, err_re, err_im, failed = [], [], [], []
    for l, (arow, erow) in enumerate(zip(approx, exact)):
        n = len(ids)
        er = np.full((len(arow), n), np.nan)
        ei = np.full((len(arow), n), np.nan)
        for j, (a, e) in enumerate(zip(arow, erow)):
            if e is None:
                failed.append((l, a.time))
                continue
            er[j] = np.abs(a.v_real - e.v_real)
            ei[j] = np.abs(a.v_imag - e.v_imag)
        worst = np.fmax(er, ei)
        j, i = np.unravel_index(np.nanargmax(worst), worst.shape)
        intervals.append(IntervalError(l, float(np.nanmax(er)), float(np.nanmax(ei)), ids[i],
                                       arow[j].time, int(np.isfinite(worst).sum())))
        err_re.append(er)
        err_im.append(ei)
    return ErrorReport(method, intervals, err_re, err_im, failed)


def validate(net, schedule, trajectory, options=None, method="combined"):
    """Exact Newton at every grid sample versus the trajectory's approximation."""
    if len(trajectory.interval_solutions) != len(schedule) - 1:
        raise LayoutMismatch("trajectory does not match the schedule's interval count")
    return error_report(trajectory, exact_samples(net, trajectory, options), method)


def newton_time_series(net, schedule, points_per_interval=11, options=None):
    """Conventional per-sample Newton along the same grid, each solve warm-started
    from the previous sample (the baseline the trajectory is timed against)."""
    options = options or SolverOptions()
    intervals = partition(schedule)
    guess = flat_start(net)
    out = []
    for l, iv in enumerate(intervals):
        times = iv.grid(points_per_interval)
        for j, t in enumerate(times):
            if l > 0 and j == 0:
                continue
            sol = solve_powerflow(net, injections_at(iv, t), guess.at_time(t), options)
            guess = sol.state.at_time(t)
            out.append(guess)
    return out


# -- scenarios ------------------------------------------------------------------------

@dataclass(frozen=True)
class VreOptions:
    share: float = 0.30  # VRE energy / demand energy over the horizon
    wind_fraction: float = 0.60
    n_wind: int = 20
    n_solar: int = 10
    hours: int = 24


def _profiles(rng, n, times):
    """Zero-mean smooth per-node shapes: two sinusoids plus seeded noise."""
    a1 = rng.uniform(0.5, 1.0, n)
    a2 = rng.uniform(0.1, 0.4, n)
    ph1 = rng.uniform(0, 2 * np.pi, n)
    ph2 = rng.uniform(0, 2 * np.pi, n)
    noise = 0.1 * rng.standard_normal((len(times), n))
    t = np.asarray(times)[:, None]
    u = a1 * np.sin(2 * np.pi * t / 24 + ph1) + a2 * np.sin(2 * np.pi * t / 12 + ph2) + noise
    return u - u.mean(axis=0)


def generate_scenario(net, seed=0, variation_fraction=1.0, vre=None, check=True, options=None):
    """Day-ahead hourly schedule with VRE injections and mixed nodal trends.

    PQ-bus loads follow smooth seeded profiles whose reactive part moves
    against the active part. Wind and solar units are placed on seeded PQ buses
    and supply ``vre.share`` of the demand energy, ``vre.wind_fraction`` of it
    from wind. PV-bus generation absorbs the net-load changes in proportion to
    its base output. The profile intensity is chosen so that the summed
    |dP| over the horizon reaches ``variation_fraction`` times the base total
    demand.
    """
    vre = vre or VreOptions()
    if variation_fraction < 0:
        raise ValueError("variation_fraction must be non-negative")
    rng = np.random.default_rng(seed)
    s = net.sets
    base = InjectionTarget.from_case(net)
    times = np.arange(vre.hours + 1, dtype=float)
    pos = {int(i): k for k, i in enumerate(s.nonslack)}
    pq_q = {int(i): k for k, i in enumerate(s.pq)}
    ids = net.bus_ids()

    pq = [int(i) for i in s.pq]
    n_vre = min(vre.n_wind + vre.n_solar, len(pq))
    chosen = rng.choice(pq, size=n_vre, replace=False)
    wind_buses = sorted(int(b) for b in chosen[:min(vre.n_wind, n_vre)])
    solar_buses = sorted(int(b) for b in chosen[min(vre.n_wind, n_vre):])

    load_p = np.array([-base.p[pos[i]] for i in pq])  # positive = consuming
    load_q = np.array([-base.q[pq_q[i]] for i in pq])
    shapes = _profiles(rng, len(pq), times)
    demand0 = load_p.sum()
    reference = base_total_demand(net)

    wind_shape = 1 + 0.5 * np.sin(2 * np.pi * (times - rng.uniform(0, 24)) / 24) + 0.1 * rng.standard_normal(len(times))
    wind_shape = np.clip(wind_shape, 0.05, None)
    wind_shape /= wind_shape.mean()
    solar_shape = np.clip(np.sin(np.pi * (times - 6) / 12), 0, None)
    solar_shape /= solar_shape.mean()
    wind_w = rng.uniform(0.5, 1.5, len(wind_buses))
    solar_w = rng.uniform(0.5, 1.5, len(solar_buses))
    wind_w /= wind_w.sum()
    solar_w /= solar_w.sum()

    gen_pv = np.array([max(base.p[pos[int(i)]], 0.0) for i in s.pv])
    gen_share = gen_pv / gen_pv.sum() if gen_pv.sum() > 0 else gen_pv

    def build(lam):
        vre_lam = min(lam, 1.0)
        p = np.tile(base.p, (len(times), 1))
        q = np.tile(base.q, (len(times), 1))
        # reactive demand moves against active demand at every load bus
        lp = load_p + lam * np.abs(load_p) * shapes
        lq = load_q - lam * np.abs(load_q) * shapes
        demand = lp.sum(axis=1)
        vre_energy = vre.share * demand.mean()
        wind_total = vre.wind_fraction * vre_energy * (1 + vre_lam * (wind_shape - 1))
        solar_total = (1 - vre.wind_fraction) * vre_energy * (1 + vre_lam * (solar_shape - 1))
        for k, i in enumerate(pq):
            p[:, pos[i]] = -lp[:, k]
            q[:, pq_q[i]] = -lq[:, k]
        for w, b in zip(wind_w, wind_buses):
            p[:, pos[b]] += w * wind_total
        for w, b in zip(solar_w, solar_buses):
            p[:, pos[b]] += w * solar_total
        redispatch = (demand - demand0) - (wind_total + solar_total)
        for k, i in enumerate(s.pv):
            p[:, pos[int(i)]] += gen_share[k] * redispatch
        targets = [base.replace(p=p[t], q=q[t]) for t in range(len(times))]
        return InjectionSchedule(list(times), targets), wind_total, solar_total, demand

    lam = 0.0
    if variation_fraction > 0:
        lo, hi = 0.0, 1.0
        while total_variation(build(hi)[0], reference) < variation_fraction:
            hi *= 2
            if hi > 1e6:
                raise InfeasibleScenario("variation target unreachable")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if total_variation(build(mid)[0], reference) < variation_fraction:
                lo = mid
            else:
                hi = mid
        lam = hi
    schedule, wind_total, solar_total, demand = build(lam)
    if variation_fraction == 0:
        schedule = InjectionSchedule(list(times), [schedule.targets[0]] * len(times))

    vre_energy = float((wind_total + solar_total).sum())
    schedule.metadata = {
        "seed": seed,
        "variation_fraction": variation_fraction,
        "intensity": lam,
        "total_variation": total_variation(schedule, reference),
        "base_total_demand": reference,
        "wind_buses": [ids[b] for b in wind_buses],
        "solar_buses": [ids[b] for b in solar_buses],
        "demand_energy": float(demand.sum()),
        "wind_energy": float(wind_total.sum()),
        "solar_energy": float(solar_total.sum()),
        "vre_share": vre_energy / float(demand.sum()),
        "wind_share": float(wind_total.sum()) / vre_energy if vre_energy > 0 else 0.0,
        "hours": vre.hours,
    }

    if check:
        try:
            solve_discrete_points(net, partition(schedule), options)
        except NonConvergence as exc:
            raise InfeasibleScenario(
                f"scenario diverges at breakpoint {exc.breakpoint}: {exc}", breakpoint=exc.breakpoint
            ) from exc
    return schedule
