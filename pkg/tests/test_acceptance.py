"""Acceptance gate: one test per criterion, one pass/fail line each.

The lines are printed in the terminal summary of every pytest run that
collects this module, and by ``python tests/test_acceptance.py``.
"""

import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import fd_derivatives, gauss_seidel  # noqa: E402
from tvpf import errors  # noqa: E402
from tvpf.case import build_ybus, case_from_json, case_to_json, case_to_matpower, load_case, parse_case  # noqa: E402
from tvpf.combinatorics import dblfact_sum, double_factorial, phi_sum  # noqa: E402
from tvpf.derivatives import derivative_series  # noqa: E402
from tvpf.norms import is_u_shaped, norm_report, vector_norm  # noqa: E402
from tvpf.powerflow import InjectionTarget, Network, power_mismatch, solve_powerflow  # noqa: E402
from tvpf.scenarios import day_ahead_118, five_bus_ramp  # noqa: E402
from tvpf.trajectory import (  # noqa: E402
    error_report,
    exact_samples,
    newton_time_series,
    partition,
    run_time_varying,
    solve_discrete_points,
)

FIXTURES = Path(__file__).parent / "fixtures"
RESULTS = {}


def record(number, title, ok, detail):
    RESULTS[number] = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
    assert ok, RESULTS[number]


@pytest.fixture(scope="module")
def five():
    net, sched = five_bus_ramp()
    return net, sched


@pytest.fixture(scope="module")
def day():
    net, sched = day_ahead_118()
    return net, sched


@pytest.fixture(scope="module")
def run5(five):
    net, sched = five
    traj = run_time_varying(net, sched, 11)
    exact = exact_samples(net, traj)
    return traj, exact


@pytest.fixture(scope="module")
def run118(day):
    net, sched = day
    t0 = time.perf_counter()
    traj = run_time_varying(net, sched, 11)
    exact = exact_samples(net, traj)
    elapsed = time.perf_counter() - t0
    return traj, exact, elapsed


def test_c01_double_factorial_identities():
    t0 = time.perf_counter()
    ok_a = all(dblfact_sum(i) == double_factorial(2 * i - 1) for i in range(2, 16))
    ok_b = all(phi_sum(d) == double_factorial(2 * d - 3) for d in range(2, 17))
    ms = (time.perf_counter() - t0) * 1e3
    record(1, "double-factorial identities", ok_a and ok_b and ms < 1.0,
           f"sum identity i=2..15 {ok_a}, phi identity d=2..16 {ok_b}, {ms:.3f} ms")


def test_c02_solver_matches_gauss_seidel():
    t0 = time.perf_counter()
    worst_v, worst_mis, parts = 0.0, 0.0, []
    for name in ("case5", "case118"):
        net = Network(load_case(name))
        target = InjectionTarget.from_case(net)
        sol = solve_powerflow(net, target)
        ref, _, _ = gauss_seidel(net.case, tol=1e-12, accel=1.6 if name == "case118" else 1.0)
        dv = max(np.abs(sol.state.v_real - ref.real).max(), np.abs(sol.state.v_imag - ref.imag).max())
        mis = np.abs(power_mismatch(sol.state, target, net)).max()
        worst_v, worst_mis = max(worst_v, dv), max(worst_mis, mis)
        parts.append(f"{name} dV {dv:.1e}")
    secs = time.perf_counter() - t0
    record(2, "Newton vs Gauss-Seidel oracle", worst_v <= 1e-8 and worst_mis <= 1e-10 and secs < 5,
           f"{', '.join(parts)}, mismatch {worst_mis:.1e}, {secs:.2f} s")


def test_c03_derivatives_match_finite_differences(five, day):
    t0 = time.perf_counter()
    worst1 = worst2 = 0.0
    for net, sched in (five, day):
        y0 = sched.targets[0]
        state = solve_powerflow(net, y0).state
        slope = partition(sched)[0].slope
        fd1, fd2 = fd_derivatives(net, y0, slope, state)
        s = derivative_series(state, slope, net, 2)
        worst1 = max(worst1, np.linalg.norm(s[1] - fd1) / np.linalg.norm(fd1))
        worst2 = max(worst2, np.linalg.norm(s[2] - fd2) / np.linalg.norm(fd2))
    secs = time.perf_counter() - t0
    record(3, "derivatives vs finite differences", worst1 <= 1e-5 and worst2 <= 1e-3 and secs < 10,
           f"x1 rel {worst1:.1e} (<=1e-5), x2 rel {worst2:.1e} (<=1e-3), {secs:.2f} s")


def test_c04_derivative_bound(five, day):
    worst = 0.0
    points = 0
    for net, sched in (five, day):
        sols = solve_discrete_points(net, partition(sched))
        for iv, sol in zip(partition(sched), sols):
            state = sol.state.at_time(iv.t_start)
            series = derivative_series(state, iv.slope, net, 6)
            rep = norm_report(state, series, net, p=2)
            for d in range(2, 7):
                worst = max(worst, rep.derivative_norms[d - 1] / rep.bounds[d - 2])
            points += 1
    record(4, "derivative-norm bound d=2..6", worst <= 1 + 1e-6,
           f"max measured/bound {worst:.2e} over {points} interval starts")


def test_c05_u_curve(five):
    net, sched = five
    iv = partition(sched)[0]
    state = solve_powerflow(net, iv.y_start).state
    norms = [vector_norm(x) for x in derivative_series(state, iv.slope, net, 8).derivatives]
    ok = is_u_shaped(norms)
    record(5, "U-shaped derivative norms (5-bus)", ok,
           f"minimum at order {int(np.argmin(norms)) + 1}, norms " + " ".join(f"{n:.1e}" for n in norms))


def test_c06_linear_accuracy(run5):
    traj, exact = run5
    err = error_report(traj, exact, "linear").global_max
    record(6, "linear function error (5-bus, 1 h)", 1e-4 < err < 5e-2, f"max |error| {err:.2e} in (1e-4, 5e-2)")


def test_c07_combined_accuracy(run5, run118):
    traj5, exact5 = run5
    traj, exact, secs = run118
    c5 = error_report(traj5, exact5).global_max
    l5 = error_report(traj5, exact5, "linear").global_max
    c118 = error_report(traj, exact).global_max
    l118 = error_report(traj, exact, "linear").global_max
    ok = c5 < 1e-4 and c118 < 1e-3 and c5 <= l5 / 10 and c118 <= l118 / 10 and secs < 60
    record(7, "combined function error", ok,
           f"5-bus {c5:.2e} (linear {l5:.1e}), 118-bus {c118:.2e} (linear {l118:.1e}), "
           f"118-bus run+validation {secs:.1f} s")


def test_c08_refinement(five, day, run5, run118):
    ratios = []
    for (net, sched), (traj, exact) in ((five, run5), (day, run118[:2])):
        coarse = error_report(traj, exact).global_max
        fine_sched = sched.refined(2)
        fine = run_time_varying(net, fine_sched, 11)
        ratios.append(coarse / error_report(fine, exact_samples(net, fine)).global_max)
    record(8, "error reduction when halving intervals", min(ratios) >= 4,
           f"5-bus {ratios[0]:.1f}x, 118-bus {ratios[1]:.1f}x (>= 4x)")


def test_c09_no_accumulation(run118):
    traj, exact, _ = run118
    per = [iv.max_err for iv in error_report(traj, exact).intervals]
    med = statistics.median(per)
    monotone = all(b >= a for a, b in zip(per, per[1:]))
    ok = not monotone and per[-1] <= 10 * med
    record(9, "no error accumulation (118-bus)", ok,
           f"last {per[-1]:.1e}, median {med:.1e}, ratio {per[-1] / med:.1f} (<= 10), monotone {monotone}")


def _best_of(fn, repeats=2):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_c10_speed(day):
    net, sched = day
    t_traj = _best_of(lambda: run_time_varying(net, sched, 11))
    t_newton = _best_of(lambda: newton_time_series(net, sched, 11))
    speedup = t_newton / t_traj
    record(10, "speed vs per-sample Newton (118-bus, 24 h)", speedup >= 3,
           f"trajectory {t_traj:.2f} s, Newton {t_newton:.2f} s, speedup {speedup:.1f}x (>= 3x)")


def test_c11_parser_corpus():
    problems = []
    for name in ("case5", "case118"):
        case = load_case(name)
        if case_from_json(case_to_json(case)) != case:
            problems.append(f"{name} json")
        if parse_case(case_to_matpower(case), name=name) != case:
            problems.append(f"{name} text")
    expected = json.loads((FIXTURES / "expected.json").read_text())
    for fname, exp in sorted(expected.items()):
        try:
            build_ybus(parse_case((FIXTURES / fname).read_text()))
            problems.append(f"{fname} accepted")
        except errors.TvpfError as exc:
            if type(exc).__name__ != exp["error"] or (exp["line"] is not None and exc.line != exp["line"]):
                problems.append(f"{fname} gave {type(exc).__name__}")
    record(11, "parser corpus", not problems,
           f"2 bundled cases round-trip, {len(expected)} malformed fixtures"
           + (f"; problems: {problems}" if problems else " all rejected as designated"))


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
