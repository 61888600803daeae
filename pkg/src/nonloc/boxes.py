"""Standard behaviors: PR, deterministic, uniform, Tsirelson, Mermin (GHZ) and Svetlichny boxes."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .polytopes import DeterministicStrategy
from .scenario import FLOAT, RATIONAL, Behavior, Bipartition, Scenario, product
from .stabilizer import StabilizerEnsemble, born_table_stabilizer, ghz_state, single_qubit_settings

HALF = Fraction(1, 2)


def pr_box() -> Behavior:
    """``a xor b = x and y``, uniform marginals."""
    return Behavior.from_function(Scenario.uniform(2),
                                  lambda x, a: HALF if (a[0] ^ a[1]) == (x[0] & x[1]) else Fraction(0), RATIONAL)


def deterministic_box(s: Scenario, outputs: Sequence[Sequence[int]]) -> Behavior:
    return DeterministicStrategy(tuple(tuple(f) for f in outputs)).behavior(s)


def uniform_box(s: Scenario) -> Behavior:
    w = Fraction(1, math.prod(s.outcomes))
    return Behavior(s, [w] * s.size, RATIONAL)


def tsirelson_box() -> Behavior:
    """Optimal CHSH statistics of a maximally entangled pair: ``E(x, y) = (-1)^(xy) / sqrt 2``."""
    e = 1 / math.sqrt(2)
    return Behavior.from_function(Scenario.uniform(2),
                                  lambda x, a: (1 + (-1) ** (a[0] + a[1] + x[0] * x[1]) * e) / 4, FLOAT)


def mermin_box() -> Behavior:
    """GHZ_3 measured with X or Y on each qubit (exact)."""
    e = StabilizerEnsemble.pure(ghz_state(3), name="ghz3")
    return born_table_stabilizer(e, single_qubit_settings(3, ["XY"] * 3))


def svetlichny_box() -> Behavior:
    """``a xor b xor c = xy xor yz xor xz``, uniform over the allowed outcomes."""
    def p(x, a):
        x0, x1, x2 = x
        return Fraction(1, 4) if (a[0] ^ a[1] ^ a[2]) == ((x0 & x1) ^ (x1 & x2) ^ (x0 & x2)) else Fraction(0)
    return Behavior.from_function(Scenario.uniform(3), p, RATIONAL)


def pr_with_spectator(spectator: int = 0) -> Behavior:
    """Three parties: a PR box shared by the two others, the ``spectator`` uniform and independent."""
    cut = Bipartition.of([spectator], 3)
    solo = uniform_box(Scenario.uniform(1))
    return product(solo, pr_box(), cut) if spectator in cut.block_a else product(pr_box(), solo, cut)
