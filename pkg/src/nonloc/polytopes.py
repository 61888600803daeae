"""Vertex sets of the local, no-signaling and hybrid (bipartition-local) correlation polytopes."""

from __future__ import annotations

import functools
import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exact
from .errors import CapExceeded, InputError
from .scenario import RATIONAL, Behavior, Bipartition, Scenario, bipartitions, product

__all__ = [
    "DeterministicStrategy", "VertexSet", "bipartitions", "hybrid_vertices", "is_extremal",
    "local_deterministic_vertices", "ns_equalities", "ns_polytope_vertices",
]

LOCAL_CAP = 10 ** 6
NS_TABLE_CAP = 36
NS_RAY_CAP = 20_000
CACHE_ENV = "NONLOC_CACHE_DIR"


@dataclass(frozen=True)
class DeterministicStrategy:
    """``outputs[i][x]`` is party ``i``'s outcome for setting ``x``."""

    outputs: tuple[tuple[int, ...], ...]

    def behavior(self, s: Scenario) -> Behavior:
        if len(self.outputs) != s.m or any(len(f) != n for f, n in zip(self.outputs, s.settings)):
            raise InputError("strategy does not match the scenario")
        t = np.full(s.shape, Fraction(0), dtype=object)
        for x in s.setting_tuples():
            t[x + tuple(self.outputs[i][x[i]] for i in range(s.m))] = Fraction(1)
        return Behavior(s, t, RATIONAL)


@dataclass
class VertexSet:
    scenario: Scenario
    vertices: list[Behavior]
    method: str
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def keys(self) -> set:
        return {tuple(v.flat()) for v in self.vertices}

    def columns(self) -> list[list[Fraction]]:
        return [list(v.flat()) for v in self.vertices]

    def to_json(self) -> dict:
        sc = self.scenario
        return {
            "provenance": {"scenario": {"settings": list(sc.settings), "outcomes": list(sc.outcomes)},
                           "method": self.method, "label": self.label, "count": len(self), **self.meta},
            "vertices": [[str(p) for p in v.flat()] for v in self.vertices],
        }

    @classmethod
    def from_json(cls, doc: dict) -> VertexSet:
        prov = doc["provenance"]
        sc = Scenario(tuple(prov["scenario"]["settings"]), tuple(prov["scenario"]["outcomes"]))
        verts = [Behavior(sc, [Fraction(p) for p in row], RATIONAL) for row in doc["vertices"]]
        extra = {k: v for k, v in prov.items() if k not in ("scenario", "method", "label", "count")}
        return cls(sc, verts, prov["method"], prov.get("label", ""), extra)


def local_deterministic_vertices(s: Scenario, cap: int = LOCAL_CAP) -> VertexSet:
    """All ``prod_i o_i**s_i`` deterministic local strategies."""
    count = math.prod(o ** n for o, n in zip(s.outcomes, s.settings))
    if count > cap:
        raise CapExceeded(f"{count} deterministic vertices exceed the cap {cap}")
    per_party = [list(itertools.product(range(o), repeat=n)) for o, n in zip(s.outcomes, s.settings)]
    verts = [DeterministicStrategy(tuple(f)).behavior(s) for f in itertools.product(*per_party)]
    return VertexSet(s, verts, "deterministic", "L")


def ns_equalities(s: Scenario) -> list[list[int]]:
    """Homogeneous equalities cutting out the direction space of the no-signaling polytope.

    Rows: every per-setting sum vanishes, and for each party ``k`` the marginal of the
    others is the same for every ``x_k``.
    """
    size = s.size
    idx = np.arange(size).reshape(s.shape)
    rows = []
    for x in s.setting_tuples():
        row = [0] * size
        for j in idx[x].reshape(-1):
            row[int(j)] = 1
        rows.append(row)
    m = s.m
    for k in range(m):
        others_x = [range(s.settings[i]) for i in range(m) if i != k]
        others_a = [range(s.outcomes[i]) for i in range(m) if i != k]
        for xk in range(1, s.settings[k]):
            for xr in itertools.product(*others_x):
                for ar in itertools.product(*others_a):
                    row = [0] * size
                    for sign, sx in ((1, xk), (-1, 0)):
                        x = list(xr)
                        x.insert(k, sx)
                        for ak in range(s.outcomes[k]):
                            a = list(ar)
                            a.insert(k, ak)
                            row[int(idx[tuple(x) + tuple(a)])] += sign
                    rows.append(row)
    return rows


def _double_description(A: list[list[int]], ray_cap: int) -> list[list[int]]:
    """Extreme rays of the pointed cone ``{y : A y >= 0}`` (integer data)."""
    d = len(A[0])
    chosen: list[int] = []
    for i, row in enumerate(A):
        if exact.rank([A[j] for j in chosen] + [row]) > len(chosen):
            chosen.append(i)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise InputError("constraint system does not define a pointed cone")
    # Columns of the inverse of the chosen block are the extreme rays of the initial simplicial cone.
    aug = [list(map(Fraction, A[i])) + [Fraction(int(j == k)) for j in range(d)] for k, i in enumerate(chosen)]
    red, _ = exact.rref(aug)
    inv = [row[d:] for row in red]
    rays = [exact.integerize([inv[r][c] for r in range(d)]) for c in range(d)]
    zeros = []
    for c in range(d):
        mask = 0
        for k, i in enumerate(chosen):
            if k != c:
                mask |= 1 << i
        zeros.append(mask)
    for i in range(len(A)):
        if i in chosen:
            continue
        row = A[i]
        vals = [sum(a * b for a, b in zip(row, r)) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        new_rays, new_zeros = [], []
        for k, v in enumerate(vals):
            if v > 0:
                new_rays.append(rays[k])
                new_zeros.append(zeros[k])
            elif v == 0:
                new_rays.append(rays[k])
                new_zeros.append(zeros[k] | (1 << i))
        for p in pos:
            for q in neg:
                common = zeros[p] & zeros[q]
                if bin(common).count("1") < d - 2:
                    continue
                if any(k != p and k != q and (zeros[k] & common) == common for k in range(len(rays))):
                    continue
                w = [vals[p] * b - vals[q] * a for a, b in zip(rays[p], rays[q])]
                new_rays.append(exact.integerize(w))
                new_zeros.append(common | (1 << i))
        if len(new_rays) > ray_cap:
            raise CapExceeded(f"double description exceeded {ray_cap} intermediate rays")
        rays, zeros = new_rays, new_zeros
    return rays


def _cache_path(kind: str, s: Scenario) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    digest = hashlib.sha256(f"{kind}:{s.key()}".encode()).hexdigest()[:16]
    return Path(root) / f"{kind}-{s.key()}-{digest}.json"


def ns_polytope_vertices(s: Scenario, cap: int = NS_TABLE_CAP, ray_cap: int = NS_RAY_CAP) -> VertexSet:
    """Vertices of the no-signaling polytope by exact double description (memoized; treat as read-only)."""
    if s.size > cap:
        raise CapExceeded(f"scenario too large for V-enumeration: table dimension {s.size} > cap {cap}")
    return _ns_vertices(s, ray_cap)


@functools.lru_cache(maxsize=64)
def _ns_vertices(s: Scenario, ray_cap: int) -> VertexSet:
    path = _cache_path("ns", s)
    if path is not None and path.exists():
        return VertexSet.from_json(json.loads(path.read_text()))
    size = s.size
    p0 = Fraction(1, math.prod(s.outcomes))  # the uniform box satisfies every equality
    basis = exact.nullspace(ns_equalities(s), size)
    # y = (t, z) parametrizes p = t * p0 + N z; each table entry must stay nonnegative.
    rows = [[1] + [0] * len(basis)]
    for k in range(size):
        rows.append(exact.integerize([p0] + [b[k] for b in basis]))
    rays = _double_description(rows, ray_cap)
    verts = []
    seen = set()
    for r in rays:
        t = Fraction(r[0])
        if t <= 0:
            raise AssertionError("unbounded direction in a no-signaling polytope")
        p = [p0 + sum(Fraction(c) * b[k] for c, b in zip(r[1:], basis)) / t for k in range(size)]
        key = tuple(p)
        if key not in seen:
            seen.add(key)
            verts.append(Behavior(s, p, RATIONAL))
    verts.sort(key=lambda v: tuple(v.flat()), reverse=True)
    out = VertexSet(s, verts, "double-description", "NS", {"dimension": len(basis)})
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(out.to_json(), sort_keys=True))
    return out


def is_extremal(v: Behavior) -> bool:
    """Rank test: ``v`` is a vertex of the NS polytope iff its tight constraints have full rank."""
    s = v.scenario
    tight = [[int(j == k) for j in range(s.size)] for k, p in enumerate(v.flat()) if p == 0]
    return exact.rank(ns_equalities(s) + tight) == s.size


def hybrid_vertices(s: Scenario, cut: Bipartition, cap: int = NS_TABLE_CAP) -> VertexSet:
    """Products of an NS vertex on ``cut.block_a`` with an NS vertex on ``cut.block_b`` (memoized)."""
    if cut.m != s.m:
        raise InputError(f"cut over {cut.m} parties, scenario has {s.m}")
    return _hybrid(s, cut, cap)


@functools.lru_cache(maxsize=64)
def _hybrid(s: Scenario, cut: Bipartition, cap: int) -> VertexSet:
    va = ns_polytope_vertices(s.sub(cut.block_a), cap)
    vb = ns_polytope_vertices(s.sub(cut.block_b), cap)
    verts, seen = [], set()
    for a in va:
        for b in vb:
            v = product(a, b, cut)
            key = tuple(v.flat())
            if key not in seen:
                seen.add(key)
                verts.append(v)
    return VertexSet(s, verts, "hybrid-product", cut.label, {"sides": [len(va), len(vb)]})
