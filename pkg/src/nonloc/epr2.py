"""Maximal-weight decompositions of a behavior into local / hybrid parts plus a no-signaling rest.

All three problems are solved as one packing LP::

    maximize  sum_j w_j   subject to   sum_j w_j V_j <= b,  w >= 0

over the model vertices ``V_j``.  The slack ``R = b - sum_j w_j V_j`` is then the
unnormalized remainder: it is entrywise nonnegative, it is no-signaling because
``b`` and every ``V_j`` are, and each of its per-setting sums equals
``1 - sum_j w_j``.  The LP dual ``y >= 0`` with ``y . V_j >= 1`` is a Bell-type
functional: every model vertex scores at least 1 and every no-signaling box at
least 0, so ``y . b`` bounds the model weight of ``b`` from above.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError
from .lp import solve_packing
from .polytopes import LOCAL_CAP, NS_TABLE_CAP, VertexSet, hybrid_vertices, local_deterministic_vertices
from .scenario import FLOAT, RATIONAL, Behavior, Bipartition, bipartitions, validate

LOCAL = "L"


@dataclass
class DualCertificate:
    """``coefficients . V >= model_bound`` on model vertices, ``>= ns_bound`` on all NS boxes."""

    coefficients: list
    model_bound: object
    ns_bound: object
    value: object

    def to_json(self) -> dict:
        return {"coefficients": [_num(c) for c in self.coefficients], "model_bound": _num(self.model_bound),
                "ns_bound": _num(self.ns_bound), "value": _num(self.value)}


@dataclass
class DecompositionResult:
    kind: str
    target: Behavior
    families: list[VertexSet]
    value: object
    family_weights: dict
    primal: list  # (family label, vertex index, weight), nonzero weights only
    dual: DualCertificate | None
    residual: Behavior | None
    status: str
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def p_ns(self):
        return 1 - self.value

    @property
    def p_l(self):
        return self.family_weights.get(LOCAL)

    def reconstruct(self) -> Behavior:
        """``sum w_j V_j + p_NS * residual``; equals the target exactly in rational mode."""
        by_label = {f.label: f for f in self.families}
        acc = np.zeros(self.target.scenario.shape, dtype=object if self.mode == RATIONAL else float)
        if self.mode == RATIONAL:
            acc[...] = Fraction(0)
        for label, k, w in self.primal:
            acc = acc + w * _table(by_label[label].vertices[k], self.mode)
        if self.residual is not None:
            acc = acc + self.p_ns * _table(self.residual, self.mode)
        return Behavior(self.target.scenario, acc, self.mode, self.target.eps)

    def to_json(self) -> dict:
        per_cut = {k: _num(v) for k, v in self.family_weights.items() if k != LOCAL}
        values = {"p_NS": _num(self.p_ns), "per_cut": per_cut}
        if LOCAL in self.family_weights:
            values["p_L"] = _num(self.family_weights[LOCAL])
        if self.kind == "bipartition":
            values["p_L_cut"] = _num(self.value)
        return {
            "kind": self.kind,
            "values": values,
            "primal": [{"family": f, "vertex": k, "weight": _num(w)} for f, k, w in self.primal],
            "dual": self.dual.to_json() if self.dual else None,
            "mode": self.mode,
            "status": self.status,
            **({"meta": self.meta} if self.meta else {}),
        }


def _num(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def _table(b: Behavior, mode: str) -> np.ndarray:
    return b.table if mode == RATIONAL else np.array(b.table, dtype=float)


def _prepare(b: Behavior, mode: str | None) -> tuple[Behavior, str]:
    mode = mode or b.mode
    if mode not in (RATIONAL, FLOAT):
        raise InputError(f"unknown numeric mode {mode!r}")
    if mode == RATIONAL and not b.rational:
        raise InputError("rational mode needs a rational behavior")
    rep = validate(b)
    if not rep.ok:
        raise InputError("behavior failed validation: " + "; ".join(v.describe() for v in rep.violations[:3]))
    return (b.to_float() if mode == FLOAT else b), mode


def decompose(b: Behavior, families: list[VertexSet], kind: str, mode: str | None = None) -> DecompositionResult:
    """Solve the packing LP over the union of ``families`` (earlier families win duplicate vertices)."""
    b, mode = _prepare(b, mode)
    return _solve(b, families, kind, mode)


def _solve(b: Behavior, families: list[VertexSet], kind: str, mode: str) -> DecompositionResult:
    for f in families:
        if f.scenario != b.scenario:
            raise InputError(f"vertex set {f.label!r} is over a different scenario")
    columns, owners, seen = [], [], set()
    for f in families:
        for k, v in enumerate(f.vertices):
            key = tuple(v.flat())
            if key in seen:
                continue
            seen.add(key)
            columns.append(list(v.flat()))
            owners.append((f.label, k))
    rhs = list(b.flat())
    sol = solve_packing(columns, rhs, mode=mode, eps=b.eps)
    zero = Fraction(0) if mode == RATIONAL else 0.0
    weights = {f.label: zero for f in families}
    primal = []
    for (label, k), w in zip(owners, sol.x):
        if w > (0 if mode == RATIONAL else b.eps):
            weights[label] += w
            primal.append((label, k, w))
    value = sol.value
    if mode == FLOAT:
        value = min(max(value, 0.0), 1.0)
    by_label = {f.label: f for f in families}
    rest = np.array(b.table, dtype=object if mode == RATIONAL else float)
    for label, k, w in primal:
        rest = rest - w * _table(by_label[label].vertices[k], mode)
    residual = None
    p_ns = 1 - value
    if p_ns > (0 if mode == RATIONAL else b.eps):
        r = rest / p_ns
        if mode == FLOAT:
            r = np.clip(r, 0.0, None)
        residual = Behavior(b.scenario, r, mode, b.eps)
    dual = DualCertificate(sol.y, Fraction(1) if mode == RATIONAL else 1.0,
                           Fraction(0) if mode == RATIONAL else 0.0,
                           sum(yi * bi for yi, bi in zip(sol.y, rhs)))
    return DecompositionResult(kind, b, families, value, weights, primal, dual, residual, "optimal", mode,
                               {"columns": len(columns), "pivots": sol.pivots})


def local_fraction(b: Behavior, mode: str | None = None, cap: int = LOCAL_CAP) -> DecompositionResult:
    """Largest weight of a local (deterministic-mixture) part of ``b``."""
    b, mode = _prepare(b, mode)
    return _solve(b, [local_deterministic_vertices(b.scenario, cap)], "local", mode)


def bipartition_local_fraction(b: Behavior, cut: Bipartition, mode: str | None = None,
                               cap: int = NS_TABLE_CAP) -> DecompositionResult:
    """Largest weight of a part that is a mixture of products across ``cut``."""
    b, mode = _prepare(b, mode)
    return _solve(b, [hybrid_vertices(b.scenario, cut, cap)], "bipartition", mode)


def cut_scan(b: Behavior, mode: str | None = None, cap: int = NS_TABLE_CAP,
             workers: int | None = None) -> dict[str, DecompositionResult]:
    """``bipartition_local_fraction`` for every cut, keyed by cut label in canonical order."""
    cuts = bipartitions(b.scenario.m)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda c: bipartition_local_fraction(b, c, mode, cap), cuts))
    return {c.label: r for c, r in zip(cuts, results)}


def svetlichny_decomposition(b: Behavior, mode: str | None = None, local_cap: int = LOCAL_CAP,
                             cap: int = NS_TABLE_CAP) -> DecompositionResult:
    """Tripartite split into local, per-cut hybrid, and genuinely three-way nonlocal parts."""
    if b.scenario.m != 3:
        raise InputError(f"the hybrid decomposition needs 3 parties, got {b.scenario.m}")
    b, mode = _prepare(b, mode)
    families = [local_deterministic_vertices(b.scenario, local_cap)]
    families += [hybrid_vertices(b.scenario, c, cap) for c in bipartitions(3)]
    return _solve(b, families, "svetlichny", mode)


def check_dual_certificate(r: DecompositionResult, b: Behavior | None = None) -> bool:
    """Re-check the dual functional against every model vertex and the target value."""
    if r.status != "optimal" or r.dual is None:
        return False
    b = b if b is not None else r.target
    d = r.dual
    exact = r.mode == RATIONAL
    tol = 0 if exact else max(b.eps, 1e-9) * 10
    coeffs = [Fraction(c) for c in d.coefficients] if exact else np.array(d.coefficients, dtype=float)
    if len(coeffs) != b.scenario.size:
        return False
    if any(c < -tol for c in coeffs):  # nonnegative functional: NS bound 0
        return False

    def score(v: Behavior):
        vals = v.flat() if exact else np.array(v.flat(), dtype=float)
        return sum(c * p for c, p in zip(coeffs, vals))

    for f in r.families:
        for v in f.vertices:
            if score(v) < d.model_bound - tol:
                return False
    value = score(b)
    if exact:
        return value == r.value and d.value == r.value
    return bool(abs(value - r.value) <= 1e-7 and abs(d.value - r.value) <= 1e-7)
