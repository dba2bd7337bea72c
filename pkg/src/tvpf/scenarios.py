"""Bundled scenarios.

``five_bus_ramp`` is a single one-hour interval on the 5-bus case in which
the non-slack injections move by more than their combined base magnitude.
Bus 2 ramps P and Q in opposite directions; buses 3 and 4 move both the
same way. ``day_ahead_118`` is the seeded 24-hour scenario on the 118-bus case.
"""

from __future__ import annotations

import numpy as np

from .case import load_case
from .powerflow import InjectionTarget, Network
from .trajectory import InjectionSchedule, generate_scenario

# p.u. change over the hour; P for buses 1-4, Q for PQ buses 2-4
FIVE_BUS_DP = (3.9, -2.75, 1.8, 1.15)
FIVE_BUS_DQ = (0.76, 0.78, 0.94)

DAY_AHEAD_SEED = 0
DAY_AHEAD_VARIATION = 1.0


def five_bus_ramp(net=None):
    net = net or Network(load_case("case5"))
    y0 = InjectionTarget.from_case(net)
    y1 = y0.replace(p=y0.p + np.array(FIVE_BUS_DP), q=y0.q + np.array(FIVE_BUS_DQ))
    return net, InjectionSchedule([0.0, 1.0], [y0, y1], {"name": "five_bus_ramp"})


def day_ahead_118(net=None, seed=DAY_AHEAD_SEED, variation_fraction=DAY_AHEAD_VARIATION):
    net = net or Network(load_case("case118"))
    return net, generate_scenario(net, seed=seed, variation_fraction=variation_fraction)
