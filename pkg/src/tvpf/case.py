"""Network case model: MATPOWER-subset parser, JSON serialization and Ybus.

Only the numeric-matrix part of a MATPOWER case file is understood::

    mpc.baseMVA = 100;
    mpc.bus = [ ... ];
    mpc.gen = [ ... ];
    mpc.branch = [ ... ];

Comments (``%`` to end of line) are stripped, the ``function`` header supplies
the case name, and any other ``mpc.*`` assignment is skipped with a warning.
All electrical quantities are converted to per-unit on the system base at
parse time. Generator output is netted into the bus demand, so
``p_demand = (Pd - sum Pg) / baseMVA``.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateBusId,
    MalformedCase,
    MissingSlack,
    NonPositiveBase,
    ZeroImpedanceBranch,
)

log = logging.getLogger(__name__)

BUNDLED_CASES = ("case5", "case118")

# MATPOWER column indices (0-based)
BUS_I, BUS_TYPE, PD, QD, GS, BS, _AREA, VM, VA = range(9)
GEN_BUS, PG, QG, _QMAX, _QMIN, VG, _MBASE, GEN_STATUS = range(8)
F_BUS, T_BUS, BR_R, BR_X, BR_B, _RATE_A, _RATE_B, _RATE_C, TAP, SHIFT, BR_STATUS = range(11)

MIN_COLUMNS = {"bus": 9, "gen": 8, "branch": 11}


class BusType(enum.Enum):
    PQ = 1
    PV = 2
    SLACK = 3


@dataclass(frozen=True)
class Bus:
    id: int
    bus_type: BusType
    p_demand: float
    q_demand: float
    shunt_conductance: float = 0.0
    shunt_susceptance: float = 0.0
    v_setpoint: float = 1.0
    v_angle_setpoint: float = 0.0

    @property
    def p_injection(self):
        return -self.p_demand

    @property
    def q_injection(self):
        return -self.q_demand


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    series_resistance: float
    series_reactance: float
    total_charging_susceptance: float = 0.0
    tap_ratio: float = 1.0
    phase_shift: float = 0.0
    status: bool = True

    def admittances(self):
        """Return the pi-model two-port entries (y_ff, y_ft, y_tf, y_tt)."""
        if not self.status:
            return 0j, 0j, 0j, 0j
        z = complex(self.series_resistance, self.series_reactance)
        if abs(z) == 0.0:
            raise ZeroImpedanceBranch(
                f"branch {self.from_bus}-{self.to_bus} has zero series impedance"
            )
        ys = 1.0 / z
        tap = self.tap_ratio * complex(math.cos(self.phase_shift), math.sin(self.phase_shift))
        ytt = ys + 0.5j * self.total_charging_susceptance
        yff = ytt / (tap * tap.conjugate())
        yft = -ys / tap.conjugate()
        ytf = -ys / tap
        return yff, yft, ytf, ytt


@dataclass(frozen=True)
class Case:
    base_mva: float
    buses: tuple
    branches: tuple = ()
    name: str = "case"
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "_index", {b.id: i for i, b in enumerate(self.buses)})

    @property
    def n_bus(self):
        return len(self.buses)

    def index_of(self, bus_id):
        return self._index[bus_id]

    @property
    def slack_index(self):
        return next(i for i, b in enumerate(self.buses) if b.bus_type is BusType.SLACK)

    def validate(self):
        """Return a list of warnings; currently only islands are detected."""
        warnings = []
        islands = find_islands(self)
        if len(islands) > 1:
            for island in islands:
                if self.slack_index not in island:
                    ids = sorted(self.buses[i].id for i in island)
                    warnings.append(f"island without slack: buses {ids}")
        return warnings

    def scaled(self, factor):
        """Copy with every bus demand multiplied by ``factor``."""
        buses = [
            Bus(b.id, b.bus_type, b.p_demand * factor, b.q_demand * factor,
                b.shunt_conductance, b.shunt_susceptance, b.v_setpoint, b.v_angle_setpoint)
            for b in self.buses
        ]
        return Case(self.base_mva, buses, self.branches, f"{self.name}_x{factor:g}")


def find_islands(case):
    """Connected components (as sets of bus positions) over in-service branches."""
    adj = {i: set() for i in range(case.n_bus)}
    for br in case.branches:
        if br.status:
            f, t = case.index_of(br.from_bus), case.index_of(br.to_bus)
            adj[f].add(t)
            adj[t].add(f)
    seen = set()
    islands = []
    for start in range(case.n_bus):
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            node = stack.pop()
            if node in comp:
                continue
            comp.add(node)
            stack.extend(adj[node] - comp)
        seen |= comp
        islands.append(comp)
    return islands


# -- parsing --------------------------------------------------------------------

_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*(.*)$", re.S)
_FUNCTION = re.compile(r"^\s*function\s+\w+\s*=\s*(\w+)")


def _strip_comment(line):
    # MATPOWER strings never contain '%' in the subset we read
    pos = line.find("%")
    return line if pos < 0 else line[:pos]


def _parse_number(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise MalformedCase(f"not a number: {token!r}", lineno) from None


def _read_tables(text):
    """Return (name, scalars, matrices) where matrices map name -> [(lineno, row)]."""
    scalars, matrices = {}, {}
    name = None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        raw = lines[i]
        m = _FUNCTION.match(raw)
        if m:
            name = m.group(1)
            i += 1
            continue
        line = _strip_comment(raw).strip()
        i += 1
        if not line:
            continue
        m = _ASSIGN.match(line)
        if not m:
            if line.startswith(("end", "return")):
                continue
            raise MalformedCase(f"unexpected statement: {line!r}", lineno)
        key, rhs = m.group(1), m.group(2).strip()
        if rhs.startswith("["):
            body = rhs[1:]
            rows = []
            start_line = lineno
            while "]" not in body:
                _collect_rows(body, lineno, rows)
                if i >= len(lines):
                    raise MalformedCase(f"unterminated matrix mpc.{key}", start_line)
                lineno = i + 1
                body = _strip_comment(lines[i])
                i += 1
            inside, _, tail = body.partition("]")
            _collect_rows(inside, lineno, rows)
            if tail.strip() not in ("", ";"):
                raise MalformedCase(f"trailing text after matrix: {tail.strip()!r}", lineno)
            matrices[key] = rows
        elif rhs.startswith(("'", '"', "{")):
            if key != "version":
                log.warning("ignoring non-numeric field mpc.%s", key)
        else:
            if not rhs.endswith(";"):
                raise MalformedCase(f"missing ';' after mpc.{key}", lineno)
            scalars[key] = _parse_number(rhs[:-1].strip(), lineno)
    return name, scalars, matrices


def _collect_rows(chunk, lineno, rows):
    for piece in chunk.split(";"):
        tokens = piece.replace(",", " ").split()
        if tokens:
            rows.append((lineno, [_parse_number(t, lineno) for t in tokens]))


def _table(matrices, key, required):
    if key not in matrices:
        if required:
            raise MalformedCase(f"missing table mpc.{key}")
        log.warning("case has no mpc.%s table; treating it as empty", key)
        return []
    rows = matrices[key]
    need = MIN_COLUMNS[key]
    width = None
    for lineno, row in rows:
        if len(row) < need:
            raise MalformedCase(f"mpc.{key} row has {len(row)} columns, need {need}", lineno)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MalformedCase(f"ragged mpc.{key} row ({len(row)} vs {width} columns)", lineno)
    return rows


def parse_case(source, name=None):
    """Parse MATPOWER case text (a string or a readable text stream)."""
    text = source if isinstance(source, str) else source.read()
    file_name, scalars, matrices = _read_tables(text)
    for key in matrices:
        if key not in MIN_COLUMNS:
            log.warning("ignoring unsupported table mpc.%s", key)

    if "baseMVA" not in scalars:
        raise MalformedCase("missing mpc.baseMVA")
    base = scalars["baseMVA"]
    if not base > 0:
        raise NonPositiveBase(f"baseMVA must be positive, got {base}")

    bus_rows = _table(matrices, "bus", required=True)
    gen_rows = _table(matrices, "gen", required=False)
    branch_rows = _table(matrices, "branch", required=False)

    ids, seen = [], set()
    for lineno, row in bus_rows:
        bus_id = row[BUS_I]
        if bus_id != int(bus_id) or bus_id < 1:
            raise MalformedCase(f"bus id must be a positive integer, got {bus_id}", lineno)
        bus_id = int(bus_id)
        if bus_id in seen:
            raise DuplicateBusId(f"bus id {bus_id} appears more than once (line {lineno})")
        seen.add(bus_id)
        ids.append(bus_id)

    gen_p = dict.fromkeys(ids, 0.0)
    gen_q = dict.fromkeys(ids, 0.0)
    gen_v = {}
    for lineno, row in gen_rows:
        bus_id = int(row[GEN_BUS])
        if bus_id not in seen:
            raise MalformedCase(f"generator at unknown bus {bus_id}", lineno)
        if row[GEN_STATUS] <= 0:
            continue
        gen_p[bus_id] += row[PG]
        gen_q[bus_id] += row[QG]
        gen_v.setdefault(bus_id, row[VG])

    buses = []
    for lineno, row in bus_rows:
        bus_id = int(row[BUS_I])
        code = int(row[BUS_TYPE])
        try:
            bus_type = BusType(code)
        except ValueError:
            raise MalformedCase(f"unsupported bus type {code} at bus {bus_id}", lineno) from None
        v_set = gen_v.get(bus_id, row[VM]) if bus_type is not BusType.PQ else row[VM]
        if bus_type is not BusType.PQ and not v_set > 0:
            raise MalformedCase(f"bus {bus_id} needs a positive voltage setpoint", lineno)
        buses.append(Bus(
            id=bus_id,
            bus_type=bus_type,
            p_demand=(row[PD] - gen_p[bus_id]) / base,
            q_demand=(row[QD] - gen_q[bus_id]) / base,
            shunt_conductance=row[GS] / base,
            shunt_susceptance=row[BS] / base,
            v_setpoint=float(v_set),
            v_angle_setpoint=math.radians(row[VA]),
        ))

    slack = [b for b in buses if b.bus_type is BusType.SLACK]
    if not slack:
        raise MissingSlack("no bus of type 3 (slack) in case")
    if len(slack) > 1:
        raise MalformedCase(f"{len(slack)} slack buses; exactly one is supported")

    branches = []
    for lineno, row in branch_rows:
        f, t = int(row[F_BUS]), int(row[T_BUS])
        for end in (f, t):
            if end not in seen:
                raise MalformedCase(f"branch refers to unknown bus {end}", lineno)
        if f == t:
            raise MalformedCase(f"branch connects bus {f} to itself", lineno)
        tap = row[TAP] if row[TAP] != 0 else 1.0
        status = row[BR_STATUS] > 0
        if status and tap <= 0:
            raise MalformedCase(f"non-positive tap ratio {tap}", lineno)
        branches.append(Branch(
            from_bus=f,
            to_bus=t,
            series_resistance=row[BR_R],
            series_reactance=row[BR_X],
            total_charging_susceptance=row[BR_B],
            tap_ratio=tap,
            phase_shift=math.radians(row[SHIFT]),
            status=status,
        ))

    case = Case(base, buses, branches, name or file_name or "case")
    for warning in case.validate():
        log.warning("%s: %s", case.name, warning)
    return case


def load_case(name_or_path):
    """Load a bundled case by name (``case5``, ``case118``) or a file path."""
    if name_or_path in BUNDLED_CASES:
        text = resources.files("tvpf.data").joinpath(f"{name_or_path}.m").read_text()
        return parse_case(text, name=name_or_path)
    path = Path(name_or_path)
    with path.open() as fh:
        return parse_case(fh, name=path.stem)


# -- serialization ----------------------------------------------------------------

def case_to_dict(case):
    buses = []
    for b in case.buses:
        d = asdict(b)
        d["bus_type"] = b.bus_type.name
        buses.append(d)
    return {
        "name": case.name,
        "base_mva": case.base_mva,
        "buses": buses,
        "branches": [asdict(br) for br in case.branches],
    }


def case_from_dict(data):
    buses = [Bus(**{**b, "bus_type": BusType[b["bus_type"]]}) for b in data["buses"]]
    branches = [Branch(**br) for br in data["branches"]]
    if not data["base_mva"] > 0:
        raise NonPositiveBase(f"base_mva must be positive, got {data['base_mva']}")
    return Case(data["base_mva"], buses, branches, data.get("name", "case"))


def case_to_json(case, indent=None):
    return json.dumps(case_to_dict(case), indent=indent)


def case_from_json(text):
    return case_from_dict(json.loads(text))


def _exact_source(value, forward, backward):
    """A float ``x`` near ``backward(value)`` with ``forward(x) == value`` when one exists.

    Keeps text round trips field-identical despite unit conversions.
    """
    x = backward(value)
    if forward(x) == value:
        return x
    lo = hi = x
    for _ in range(8):
        lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        for cand in (lo, hi):
            if forward(cand) == value:
                return cand
    return x


def case_to_matpower(case):
    """Write the case back as MATPOWER text (net injections become bus demand)."""
    base = case.base_mva

    def mw(v):
        return _exact_source(v, lambda x: x / base, lambda y: y * base)

    def deg(v):
        return _exact_source(v, math.radians, math.degrees)

    out = [f"function mpc = {case.name}", "mpc.version = '2';", f"mpc.baseMVA = {base!r};", "",
           "mpc.bus = ["]
    for b in case.buses:
        out.append("\t" + "\t".join(map(repr, [
            b.id, b.bus_type.value, mw(b.p_demand), mw(b.q_demand),
            mw(b.shunt_conductance), mw(b.shunt_susceptance), 1,
            b.v_setpoint, deg(b.v_angle_setpoint)])) + ";")
    out += ["];", "", "mpc.gen = ["]
    for b in case.buses:
        if b.bus_type is not BusType.PQ:
            out.append(f"\t{b.id}\t0\t0\t0\t0\t{b.v_setpoint!r}\t{base!r}\t1;")
    out += ["];", "", "mpc.branch = ["]
    for br in case.branches:
        out.append("\t" + "\t".join(map(repr, [
            br.from_bus, br.to_bus, br.series_resistance, br.series_reactance,
            br.total_charging_susceptance, 0, 0, 0, br.tap_ratio,
            deg(br.phase_shift), int(br.status)])) + ";")
    out += ["];", ""]
    return "\n".join(out)


# -- admittance matrix ----------------------------------------------------------------

def build_ybus(case):
    """Dense complex bus admittance matrix in ``case.buses`` order."""
    n = case.n_bus
    ybus = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        if not br.status:
            continue
        f, t = case.index_of(br.from_bus), case.index_of(br.to_bus)
        yff, yft, ytf, ytt = br.admittances()
        ybus[f, f] += yff
        ybus[f, t] += yft
        ybus[t, f] += ytf
        ybus[t, t] += ytt
    for i, b in enumerate(case.buses):
        ybus[i, i] += complex(b.shunt_conductance, b.shunt_susceptance)
    ybus.setflags(write=False)
    return ybus
