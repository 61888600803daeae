"""Measurement scenarios, behaviors (probability tables) and their algebra.

A behavior over ``m`` parties is stored as a numpy array of shape
``settings + outcomes``.  Flattened in C order this is the canonical table
order used everywhere: setting tuple outer, outcome tuple inner, party 0 most
significant.  Rational behaviors hold :class:`fractions.Fraction` entries in an
object array; float behaviors hold ``float64``.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError, SignalingError, StructuralError, ZeroProbabilityError

DEFAULT_EPS = 1e-9
TABLE_CAP = 1 << 20

RATIONAL = "rational"
FLOAT = "float"


@dataclass(frozen=True)
class Scenario:
    """Party count with per-party setting and outcome counts."""

    settings: tuple[int, ...]
    outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(int(s) for s in self.settings))
        object.__setattr__(self, "outcomes", tuple(int(o) for o in self.outcomes))
        if len(self.settings) != len(self.outcomes):
            raise InputError("settings and outcomes must list the same number of parties")
        if not self.settings:
            raise InputError("a scenario needs at least one party")
        if any(s < 1 for s in self.settings):
            raise InputError(f"setting counts must be >= 1, got {self.settings}")
        if any(o < 2 for o in self.outcomes):
            raise InputError(f"outcome counts must be >= 2, got {self.outcomes}")
        if self.size > TABLE_CAP:
            raise InputError(f"table size {self.size} exceeds cap {TABLE_CAP}")

    @classmethod
    def uniform(cls, m: int, settings: int = 2, outcomes: int = 2) -> Scenario:
        return cls((settings,) * m, (outcomes,) * m)

    @property
    def m(self) -> int:
        return len(self.settings)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.settings + self.outcomes

    @property
    def size(self) -> int:
        return math.prod(self.settings) * math.prod(self.outcomes)

    def sub(self, parties: Iterable[int]) -> Scenario:
        parties = sorted(parties)
        return Scenario(
            tuple(self.settings[i] for i in parties),
            tuple(self.outcomes[i] for i in parties),
        )

    def setting_tuples(self):
        return itertools.product(*(range(s) for s in self.settings))

    def outcome_tuples(self):
        return itertools.product(*(range(o) for o in self.outcomes))

    def key(self) -> str:
        return "s" + "-".join(map(str, self.settings)) + "_o" + "-".join(map(str, self.outcomes))


def party_name(i: int) -> str:
    return string.ascii_uppercase[i] if i < 26 else f"P{i}"


@dataclass(frozen=True, order=True)
class Bipartition:
    """Split of the parties into two nonempty blocks; ``block_a`` holds the lowest index."""

    block_a: tuple[int, ...]
    block_b: tuple[int, ...]

    def __post_init__(self):
        a, b = tuple(sorted(self.block_a)), tuple(sorted(self.block_b))
        if not a or not b:
            raise InputError("both blocks of a bipartition must be nonempty")
        if set(a) & set(b):
            raise InputError("bipartition blocks overlap")
        if set(a) | set(b) != set(range(len(a) + len(b))):
            raise InputError("bipartition blocks must cover parties 0..m-1")
        if min(b) < min(a):
            a, b = b, a
        object.__setattr__(self, "block_a", a)
        object.__setattr__(self, "block_b", b)

    @classmethod
    def of(cls, block: Iterable[int], m: int) -> Bipartition:
        block = set(block)
        return cls(tuple(block), tuple(i for i in range(m) if i not in block))

    @property
    def m(self) -> int:
        return len(self.block_a) + len(self.block_b)

    def straddles(self, i: int, j: int) -> bool:
        return (i in self.block_a) != (j in self.block_a)

    @property
    def label(self) -> str:
        return "".join(map(party_name, self.block_a)) + ":" + "".join(map(party_name, self.block_b))

    def __str__(self) -> str:
        return self.label


def bipartitions(m: int) -> list[Bipartition]:
    """All ``2**(m-1) - 1`` bipartitions of ``m`` parties in canonical order."""
    if m < 2:
        raise InputError("bipartitions need at least two parties")
    cuts = []
    rest = list(range(1, m))
    for k in range(0, m - 1):
        for extra in itertools.combinations(rest, k):
            cuts.append(Bipartition.of((0, *extra), m))
    return cuts


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    raise StructuralError(f"rational table entry {v!r} is not an int, Fraction or 'p/q' string")


class Behavior:
    """Immutable probability table ``P(a|x)`` over a :class:`Scenario`."""

    __slots__ = ("scenario", "table", "mode", "eps")

    def __init__(self, scenario: Scenario, table, mode: str | None = None, eps: float = DEFAULT_EPS):
        arr = np.asarray(table, dtype=object)
        if arr.size != scenario.size:
            raise StructuralError(f"table has {arr.size} entries, scenario needs {scenario.size}")
        arr = arr.reshape(scenario.shape)
        if mode is None:
            mode = RATIONAL if all(isinstance(v, (int, np.integer, Fraction)) for v in arr.flat) else FLOAT
        if mode == RATIONAL:
            out = np.empty(scenario.shape, dtype=object)
            for idx, v in np.ndenumerate(arr):
                out[idx] = _as_fraction(v)
        elif mode == FLOAT:
            out = np.array(arr, dtype=float)
        else:
            raise InputError(f"unknown numeric mode {mode!r}")
        out.flags.writeable = False
        self.scenario = scenario
        self.table = out
        self.mode = mode
        self.eps = eps

    @classmethod
    def from_function(cls, scenario: Scenario, fn: Callable[[tuple, tuple], object], mode: str | None = None,
                      eps: float = DEFAULT_EPS) -> Behavior:
        vals = [fn(x, a) for x in scenario.setting_tuples() for a in scenario.outcome_tuples()]
        return cls(scenario, vals, mode, eps)

    @property
    def rational(self) -> bool:
        return self.mode == RATIONAL

    @property
    def tol(self):
        return 0 if self.rational else self.eps

    def p(self, x: Sequence[int], a: Sequence[int]):
        return self.table[tuple(x) + tuple(a)]

    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)

    def to_float(self) -> Behavior:
        if not self.rational:
            return self
        return Behavior(self.scenario, np.array(self.table, dtype=float), FLOAT, self.eps)

    def correlator(self, x: Sequence[int]):
        """Expectation of the product of +-1 outcome values (outcome 0 -> +1) for binary scenarios."""
        total = 0
        for a in self.scenario.outcome_tuples():
            total += (-1) ** sum(a) * self.p(x, a)
        return total

    def allclose(self, other: Behavior, tol: float = 1e-9) -> bool:
        if self.scenario != other.scenario:
            return False
        return bool(np.max(np.abs(np.array(self.table, dtype=float) - np.array(other.table, dtype=float))) <= tol)

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return self.scenario == other.scenario and bool(np.all(self.table == other.table))

    def __hash__(self):
        return hash((self.scenario, tuple(self.table.flat)))

    def __repr__(self):
        return f"Behavior({self.scenario.settings}, {self.scenario.outcomes}, mode={self.mode})"


@dataclass(frozen=True)
class Violation:
    kind: str  # "nonnegativity" | "normalization" | "no-signaling"
    residual: float
    party: int | None = None
    settings: tuple | None = None
    outcomes: tuple | None = None

    def describe(self) -> str:
        bits = [self.kind]
        if self.party is not None:
            bits.append(f"party {party_name(self.party)}")
        if self.settings is not None:
            bits.append(f"settings {self.settings}")
        if self.outcomes is not None:
            bits.append(f"outcomes {self.outcomes}")
        bits.append(f"residual {self.residual:.3g}")
        return ", ".join(bits)


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "party": v.party, "settings": v.settings, "outcomes": v.outcomes,
                 "residual": float(v.residual)}
                for v in self.violations
            ],
        }


def _signaling_violations(b: Behavior) -> list[Violation]:
    # Party k cannot signal iff the others' marginal is independent of x_k; induction covers all subsets.
    sc, t, tol = b.scenario, b.table, b.tol
    out = []
    if sc.m == 1:
        return out
    for k in range(sc.m):
        marg = t.sum(axis=sc.m + k)
        ref = np.take(marg, 0, axis=k)
        for xk in range(1, sc.settings[k]):
            diff = np.take(marg, xk, axis=k) - ref
            mag = np.abs(np.array(diff, dtype=float))
            worst = float(mag.max()) if mag.size else 0.0
            if b.rational:
                flagged = any(v != 0 for v in diff.flat)
            else:
                flagged = worst > tol
            if flagged:
                out.append(Violation("no-signaling", worst, party=k, settings=(0, xk)))
    return out


def validate(b: Behavior) -> ValidationReport:
    """Check nonnegativity, normalization and no-signaling, reporting every residual."""
    sc, t = b.scenario, b.table
    if t.shape != sc.shape:
        raise StructuralError(f"table shape {t.shape} does not match scenario {sc.shape}")
    if any(v is None for v in t.flat):
        raise StructuralError("table has missing entries")
    tol = b.tol
    rep = ValidationReport()
    for idx, v in np.ndenumerate(t):
        if v < -tol:
            rep.violations.append(Violation("nonnegativity", float(-v), settings=idx[: sc.m], outcomes=idx[sc.m:]))
    sums = t.reshape(math.prod(sc.settings), math.prod(sc.outcomes)).sum(axis=1)
    for x, s in zip(sc.setting_tuples(), sums):
        if abs(s - 1) > tol:
            rep.violations.append(Violation("normalization", float(abs(s - 1)), settings=x))
    rep.violations.extend(_signaling_violations(b))
    return rep


def _require_no_signaling(b: Behavior) -> None:
    bad = _signaling_violations(b)
    if bad:
        v = bad[0]
        raise SignalingError(
            f"behavior signals: party {party_name(v.party)} settings {v.settings} (residual {v.residual:.3g})",
            party=v.party, settings=v.settings)


def marginal(b: Behavior, subset: Iterable[int]) -> Behavior:
    """Marginal behavior on ``subset`` (parties kept in ascending order)."""
    sc = b.scenario
    keep = sorted(set(subset))
    if not keep or any(i < 0 or i >= sc.m for i in keep):
        raise InputError(f"invalid party subset {keep}")
    _require_no_signaling(b)
    drop = [i for i in range(sc.m) if i not in keep]
    t = b.table.sum(axis=tuple(sc.m + i for i in drop)) if drop else b.table
    # No-signaling makes the discarded settings irrelevant; take the first.
    idx = tuple(0 if i in drop else slice(None) for i in range(sc.m))
    t = t[idx]
    return Behavior(sc.sub(keep), t, b.mode, b.eps)


def condition(b: Behavior, subset: Iterable[int], settings: Sequence[int], outcomes: Sequence[int]) -> Behavior:
    """Behavior of the complement given that ``subset`` measured ``settings`` and saw ``outcomes``."""
    sc = b.scenario
    parts = sorted(set(subset))
    if len(parts) != len(settings) or len(parts) != len(outcomes):
        raise InputError("need one setting and one outcome per conditioned party")
    rest = [i for i in range(sc.m) if i not in parts]
    if not rest:
        raise InputError("cannot condition on every party")
    pm = marginal(b, parts).p(settings, outcomes)
    if pm == 0 or (not b.rational and pm <= b.eps):
        raise ZeroProbabilityError(f"outcome {tuple(outcomes)} of parties {parts} under settings "
                                   f"{tuple(settings)} has probability {pm}")
    lookup_x = dict(zip(parts, settings))
    lookup_a = dict(zip(parts, outcomes))
    idx = tuple(lookup_x.get(i, slice(None)) for i in range(sc.m)) + \
        tuple(lookup_a.get(i, slice(None)) for i in range(sc.m))
    return Behavior(sc.sub(rest), b.table[idx] / pm, b.mode, b.eps)


def product(left: Behavior, right: Behavior, cut: Bipartition) -> Behavior:
    """Independent product with ``left`` on ``cut.block_a`` and ``right`` on ``cut.block_b``."""
    if left.scenario.m != len(cut.block_a) or right.scenario.m != len(cut.block_b):
        raise InputError("factor sizes do not match the bipartition")
    ka, kb = len(cut.block_a), len(cut.block_b)
    mode = RATIONAL if left.rational and right.rational else FLOAT
    lt, rt = left.table, right.table
    if mode == FLOAT:
        lt, rt = np.array(lt, dtype=float), np.array(rt, dtype=float)
    outer = np.multiply.outer(lt, rt)  # axes: sA, oA, sB, oB
    order = list(cut.block_a) + list(cut.block_b)
    m = ka + kb
    src_setting = list(range(ka)) + list(range(2 * ka, 2 * ka + kb))
    src_outcome = list(range(ka, 2 * ka)) + list(range(2 * ka + kb, 2 * ka + 2 * kb))
    perm = [0] * (2 * m)
    for pos, party in enumerate(order):
        perm[party] = src_setting[pos]
        perm[m + party] = src_outcome[pos]
    table = np.transpose(outer, perm)
    settings = [0] * m
    outcomes = [0] * m
    for pos, party in enumerate(order):
        sub = left.scenario if pos < ka else right.scenario
        j = pos if pos < ka else pos - ka
        settings[party], outcomes[party] = sub.settings[j], sub.outcomes[j]
    return Behavior(Scenario(tuple(settings), tuple(outcomes)), table, mode, min(left.eps, right.eps))


def mixture(weights: Sequence, behaviors: Sequence[Behavior]) -> Behavior:
    """Convex combination; rational iff all weights and behaviors are rational."""
    if not behaviors:
        raise InputError("empty mixture")
    sc = behaviors[0].scenario
    rational = all(b.rational for b in behaviors) and all(isinstance(w, (int, Fraction)) for w in weights)
    acc = 0
    for w, b in zip(weights, behaviors):
        if b.scenario != sc:
            raise InputError("mixture of behaviors over different scenarios")
        t = b.table if rational else np.array(b.table, dtype=float)
        acc = acc + (Fraction(w) if rational else float(w)) * t
    return Behavior(sc, acc, RATIONAL if rational else FLOAT, behaviors[0].eps)


def permute_parties(b: Behavior, perm: Sequence[int]) -> Behavior:
    """Party ``i`` of the result is party ``perm[i]`` of ``b``."""
    m = b.scenario.m
    axes = list(perm) + [m + p for p in perm]
    sc = Scenario(tuple(b.scenario.settings[p] for p in perm), tuple(b.scenario.outcomes[p] for p in perm))
    return Behavior(sc, np.transpose(b.table, axes), b.mode, b.eps)


def relabel(b: Behavior, party: int, setting_perm: Sequence[int] | None = None,
            outcome_perm: Sequence[int] | None = None) -> Behavior:
    """Rename one party's settings and outcomes: new label ``k`` is old label ``perm[k]``."""
    sc, m = b.scenario, b.scenario.m
    t = b.table
    if setting_perm is not None:
        t = np.take(t, list(setting_perm), axis=party)
    if outcome_perm is not None:
        t = np.take(t, list(outcome_perm), axis=m + party)
    return Behavior(sc, t, b.mode, b.eps)


def behavior_to_json(b: Behavior) -> dict:
    sc = b.scenario
    rows = []
    for x in sc.setting_tuples():
        for a in sc.outcome_tuples():
            v = b.p(x, a)
            rows.append({"x": list(x), "a": list(a), "p": str(v) if b.rational else float(v)})
    return {"scenario": {"settings": list(sc.settings), "outcomes": list(sc.outcomes)},
            "mode": b.mode, "table": rows}


def behavior_from_json(doc: dict) -> Behavior:
    try:
        sc = Scenario(tuple(doc["scenario"]["settings"]), tuple(doc["scenario"]["outcomes"]))
        mode = doc.get("mode", RATIONAL)
        rows = doc["table"]
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"behavior document lacks field {exc}") from None
    table = np.full(sc.shape, None, dtype=object)
    for k, row in enumerate(rows):
        idx = tuple(row["x"]) + tuple(row["a"])
        if len(idx) != 2 * sc.m or any(not 0 <= v < n for v, n in zip(idx, sc.shape)):
            raise StructuralError(f"table[{k}] has out-of-range index x={row['x']} a={row['a']}")
        if table[idx] is not None:
            raise StructuralError(f"table[{k}] duplicates entry x={row['x']} a={row['a']}")
        p = row["p"]
        table[idx] = _as_fraction(p) if mode == RATIONAL else float(p)
    missing = [idx for idx, v in np.ndenumerate(table) if v is None]
    if missing:
        idx = missing[0]
        raise StructuralError(f"table is missing {len(missing)} entries, first x={list(idx[:sc.m])} "
                              f"a={list(idx[sc.m:])}")
    return Behavior(sc, table, mode)
