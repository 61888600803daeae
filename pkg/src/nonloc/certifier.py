"""Branch-by-branch certificates of maximal pair entanglement and the bipartition coverings built from them.

A pair certificate runs a local measurement protocol on every party except the
pair and audits each outcome record (leaf): the conditional state of the
pair's target qubits must be pure, decoupled from everything else, and
maximally entangled.  A covering certificate collects pair certificates over
one subject and checks that every bipartition of the parties separates some
certified pair, which rules out any local or hybrid part in the no-signaling
decomposition.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import dense
from .epr2 import local_fraction
from .errors import InputError
from .scenario import bipartitions, party_name
from .stabilizer import (SKIPPED, SMOLIN_COPIES, PauliString, StabilizerEnsemble, Step, Tableau, check_protocol,
                         complete_graph, graph_state, protocol_from_json, protocol_to_json, run_protocol,
                         smolin_five_copies, smolin_qubit, smolin_state)

PASS, FAIL = "PASS", "FAIL"
EXACT_METHOD = "exact stabilizer"
DENSE_METHOD = "numerical (tol=1e-9)"
CAVEAT = "criterion not met"
DENSE_QUBIT_CAP = 10


@dataclass
class LeafAudit:
    outcomes: tuple[int, ...]
    weight: object
    ok: bool
    detail: str = ""

    def to_json(self) -> dict:
        w = str(self.weight) if isinstance(self.weight, Fraction) else float(self.weight)
        return {"outcomes": list(self.outcomes), "weight": w, "ok": self.ok, "detail": self.detail}


@dataclass
class Certificate:
    kind: str  # "theorem1" | "theorem2"
    subject: str
    parties: int
    verdict: str
    method: str
    pair: tuple[int, int] | None = None
    targets: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    protocol: list | None = None
    protocol_hash: str | None = None
    leaves: list[LeafAudit] = field(default_factory=list)
    first_failure: int | None = None
    covering: dict | None = None
    children: list[Certificate] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "subject": self.subject, "parties": self.parties, "verdict": self.verdict,
               "method": self.method, "basis": "theorem"}
        if self.kind == "theorem1":
            doc.update({
                "pair": list(self.pair), "targets": [list(t) for t in self.targets],
                "protocol": self.protocol, "protocol_hash": self.protocol_hash,
                "leaves": [leaf.to_json() for leaf in self.leaves],
                "leaf_count": len(self.leaves),
                "first_failing_leaf": self.first_failure,
            })
        else:
            doc.update({"covering": self.covering, "pairs": [c.to_json() for c in self.children]})
            if self.passed:
                doc["asserts"] = "p_NS = 1"
        if not self.passed:
            doc["caveat"] = CAVEAT
        if self.notes:
            doc["notes"] = list(self.notes)
        return doc


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def protocol_hash(protocol_doc: list) -> str:
    return hashlib.sha256(canonical_json(protocol_doc).encode()).hexdigest()


# --------------------------------------------------------------------------- theorem 1


def theorem1_certify(subject, pair: tuple[int, int], protocol: Sequence[Step],
                     targets: tuple[Sequence[int], Sequence[int]] | None = None,
                     owners: Sequence[int] | None = None, name: str | None = None) -> Certificate:
    """Audit every leaf of ``protocol`` for a maximally entangled, decoupled pair state.

    ``subject`` is a :class:`StabilizerEnsemble`, a :class:`Tableau` or a dense
    :class:`~nonloc.dense.PureState` (one qubit per subsystem).  ``targets``
    default to all qubits of the two parties.
    """
    if isinstance(subject, Tableau):
        subject = StabilizerEnsemble.pure(subject, owners, name or "pure")
    i, j = pair
    if i == j:
        raise InputError("a pair needs two distinct parties")
    if isinstance(subject, StabilizerEnsemble):
        own = subject.owners
        n = subject.n
    elif isinstance(subject, dense.PureState):
        if any(d != 2 for d in subject.dims) or len(subject.dims) > DENSE_QUBIT_CAP:
            raise InputError(f"dense certification takes up to {DENSE_QUBIT_CAP} qubit subsystems")
        n = len(subject.dims)
        own = tuple(owners) if owners is not None else tuple(range(n))
    else:
        raise InputError(f"cannot certify a {type(subject).__name__}")
    m = max(own) + 1
    if not (0 <= i < m and 0 <= j < m):
        raise InputError(f"pair {pair} out of range for {m} parties")
    if targets is None:
        targets = ([q for q in range(n) if own[q] == i], [q for q in range(n) if own[q] == j])
    ti, tj = tuple(sorted(targets[0])), tuple(sorted(targets[1]))
    if not ti or not tj or any(own[q] != i for q in ti) or any(own[q] != j for q in tj):
        raise InputError("targets must be nonempty and owned by the pair")
    steps = list(protocol)
    allowed = [p for p in range(m) if p not in (i, j)]
    doc = protocol_to_json(steps)
    if isinstance(subject, StabilizerEnsemble):
        leaves = _stabilizer_audit(subject, steps, allowed, ti, tj)
        method, label = EXACT_METHOD, name or subject.name
    else:
        check_protocol(steps, own, allowed)
        leaves = _dense_audit(subject, steps, ti, tj)
        method, label = DENSE_METHOD, name or "dense"
    first = next((k for k, leaf in enumerate(leaves) if not leaf.ok), None)
    total = sum((leaf.weight for leaf in leaves), Fraction(0) if method == EXACT_METHOD else 0.0)
    complete = total == 1 if method == EXACT_METHOD else abs(total - 1) <= dense.ENTANGLEMENT_TOL
    notes = [] if complete else [f"leaf weights sum to {total}"]
    verdict = PASS if first is None and complete else FAIL
    return Certificate("theorem1", label, m, verdict, method, (i, j), (ti, tj), doc, protocol_hash(doc),
                       leaves, first, notes=notes)


def _stabilizer_audit(e: StabilizerEnsemble, steps, allowed, ti, tj) -> list[LeafAudit]:
    run = run_protocol(e, steps, allowed)
    pair_q = sorted(ti + tj)
    want = min(len(ti), len(tj))
    groups: dict = {}
    for b in run.batches:
        s_pair = b.entropy(pair_q)
        s_i = b.entropy(ti)
        keys = b.reduced_keys(pair_q)
        if s_pair != 0:
            problem = f"pair not decoupled from the rest (entropy {s_pair})"
        elif s_i != want:
            problem = f"pair entropy {s_i}, maximal is {want}"
        else:
            problem = ""
        for k, rec in enumerate(b.outcome_records()):
            g = groups.setdefault(rec, [Fraction(0), set(), ""])
            g[0] += b.weights[k]
            g[1].add(keys[k])
            if problem and not g[2]:
                g[2] = problem
    leaves = []
    for rec in sorted(groups):
        w, keys, problem = groups[rec]
        if not problem and len(keys) > 1:
            problem = f"conditional pair state is a mixture of {len(keys)} stabilizer states"
        leaves.append(LeafAudit(rec, w, not problem, problem or "maximally entangled"))
    return leaves


def _apply_pauli(psi: np.ndarray, obs: PauliString) -> np.ndarray:
    single = {(1, 0): dense.X, (0, 1): dense.Z, (1, 1): dense.Y}
    out = psi
    for q in obs.support:
        op = single[(obs.x[q], obs.z[q])]
        out = np.moveaxis(np.tensordot(op, out, axes=([1], [q])), 0, q)
    return (1j ** obs.phase) * out


def _dense_audit(state: dense.PureState, steps, ti, tj) -> list[LeafAudit]:
    leaves: list[LeafAudit] = []
    dims = state.dims

    def rec(psi, k, record, w):
        if k == len(steps):
            st = dense.PureState(psi.reshape(-1) / np.linalg.norm(psi), dims)
            leaves.append(_dense_leaf(st, record, w, ti, tj))
            return
        step = steps[k]
        if step.condition is not None and record[step.condition[0]] != step.condition[1]:
            rec(psi, k + 1, record + (SKIPPED,), w)
            return
        flipped = _apply_pauli(psi, step.observable)
        for bit in (0, 1):
            branch = (psi + (-1) ** bit * flipped) / 2
            p = float(np.vdot(branch, branch).real)
            if p > 1e-12:
                rec(branch / math.sqrt(p), k + 1, record + (bit,), w * p)

    rec(state.tensor(), 0, (), 1.0)
    leaves.sort(key=lambda leaf: leaf.outcomes)
    return leaves


def _dense_leaf(st: dense.PureState, record, w, ti, tj) -> LeafAudit:
    tol = dense.ENTANGLEMENT_TOL
    pair_q = sorted(ti + tj)
    rho = dense.reduced_density(st, pair_q)
    purity = float(np.trace(rho @ rho).real)
    if abs(purity - 1) > tol:
        return LeafAudit(record, w, False, f"pair not decoupled from the rest (purity {purity:.6g})")
    vals, vecs = np.linalg.eigh(rho)
    pair_state = dense.PureState.normalized(vecs[:, -1], (2,) * len(pair_q))
    side = [pair_q.index(q) for q in ti]
    if not dense.is_maximally_entangled(pair_state, side, tol):
        return LeafAudit(record, w, False, "pair state is not maximally entangled")
    return LeafAudit(record, w, True, "maximally entangled")


def replay(cert: Certificate, subject, owners: Sequence[int] | None = None) -> bool:
    """Re-run a pair certificate's recorded protocol and compare the full audit."""
    if cert.kind != "theorem1":
        return all(replay(c, subject, owners) for c in cert.children) and \
            theorem2_certify(cert.children).to_json() == cert.to_json()
    n = subject.n if isinstance(subject, (StabilizerEnsemble, Tableau)) else len(subject.dims)
    steps = protocol_from_json(cert.protocol, n)
    again = theorem1_certify(subject, cert.pair, steps, cert.targets, owners, cert.subject)
    return canonical_json(again.to_json()) == canonical_json(cert.to_json())


# --------------------------------------------------------------------------- theorem 2


def theorem2_certify(certs: Sequence[Certificate]) -> Certificate:
    """PASS iff every bipartition of the parties separates some certified pair."""
    if not certs:
        raise InputError("need at least one pair certificate")
    subjects = {c.subject for c in certs}
    if len(subjects) != 1 or any(c.kind != "theorem1" for c in certs):
        raise InputError(f"pair certificates over mixed subjects {sorted(subjects)}")
    m = certs[0].parties
    usable = [c for c in certs if c.passed]
    notes = [f"pair {_pair_label(c.pair)} did not pass and is not used" for c in certs if not c.passed]
    covering, verdict = {}, PASS
    for cut in bipartitions(m):
        hit = next((c for c in usable if cut.straddles(*c.pair)), None)
        if hit is None:
            covering[cut.label] = None
            verdict = FAIL
            notes.append(f"bipartition {cut.label} separates no certified pair")
        else:
            covering[cut.label] = _pair_label(hit.pair)
    method = EXACT_METHOD if all(c.method == EXACT_METHOD for c in certs) else DENSE_METHOD
    return Certificate("theorem2", certs[0].subject, m, verdict, method, covering=covering,
                       children=list(certs), notes=notes)


def covering_is_consistent(cert: Certificate) -> bool:
    """Structural check: each covered bipartition really separates its recorded pair."""
    names = [party_name(i) for i in range(cert.parties)]
    for label, pair in cert.covering.items():
        if pair is None:
            continue
        side_a = {names.index(c) for c in label.split(":")[0]}
        a, b = (names.index(c) for c in pair)
        if (a in side_a) == (b in side_a):
            return False
    return True


def _pair_label(pair) -> str:
    return party_name(pair[0]) + party_name(pair[1])


# --------------------------------------------------------------------------- demonstrations


def graph_pair_protocol(m: int, pair: tuple[int, int]) -> list[Step]:
    """Z on every vertex outside the pair."""
    return [Step(v, PauliString.on(m, "Z", [v])) for v in range(m) if v not in pair]


def certify_graph(m: int) -> Certificate:
    """All-pairs certification of the completely connected graph state on ``m`` vertices."""
    if m < 2:
        raise InputError("need at least two vertices")
    e = StabilizerEnsemble.pure(graph_state(complete_graph(m)), name=f"K{m}-graph")
    certs = [theorem1_certify(e, pair, graph_pair_protocol(m, pair))
             for pair in itertools.combinations(range(m), 2)]
    return theorem2_certify(certs)


def smolin_pair_protocol(p: int, q: int) -> tuple[list[Step], tuple[int, ...], tuple[int, ...]]:
    """Bell-measurement chaining across the two copies that each miss one of ``p``, ``q``.

    ``p`` and ``q`` each hold one qubit in the copy missing the other; the three
    remaining parties hold one qubit in both copies and measure ``XX`` and
    ``ZZ`` across them.  Since ``X^4`` and ``Z^4`` stabilize every Smolin
    branch, the outcomes fix ``X_p X_q`` and ``Z_p Z_q`` on the targets.
    """
    names = "ABCDE"
    P, Q = names[p], names[q]
    copy_p = next(c for c in SMOLIN_COPIES if Q not in c)
    copy_q = next(c for c in SMOLIN_COPIES if P not in c)
    steps = []
    for r in range(5):
        if r in (p, q):
            continue
        a, b = smolin_qubit(copy_p, names[r]), smolin_qubit(copy_q, names[r])
        for letters in ("XX", "ZZ"):
            steps.append(Step(r, PauliString.on(20, letters, [a, b])))
    return steps, (smolin_qubit(copy_p, P),), (smolin_qubit(copy_q, Q),)


def smolin_protocol_doc() -> dict:
    """Shippable protocol artifact: targets and steps for all ten pairs."""
    out = {}
    for p, q in itertools.combinations(range(5), 2):
        steps, ti, tj = smolin_pair_protocol(p, q)
        out[_pair_label((p, q))] = {"pair": [p, q], "targets": [list(ti), list(tj)],
                                    "steps": protocol_to_json(steps)}
    return {"subject": "smolin-x5", "qubits": 20, "pairs": out}


def certify_smolin(protocol_doc: dict | None = None, ensemble: StabilizerEnsemble | None = None) -> Certificate:
    """Certify all ten pairs of five Smolin copies and assemble the five-party covering."""
    doc = protocol_doc or smolin_protocol_doc()
    e = ensemble or smolin_five_copies()
    certs = []
    for label in sorted(doc["pairs"]):
        item = doc["pairs"][label]
        steps = protocol_from_json(item["steps"], e.n)
        certs.append(theorem1_certify(e, tuple(item["pair"]), steps, tuple(map(tuple, item["targets"]))))
    return theorem2_certify(certs)


def smolin_single_copy_control() -> Certificate:
    """One Smolin copy, pair (A, B), C and D each measure X: the criterion is not met."""
    e = smolin_state()
    steps = [Step(2, PauliString.on(4, "X", [2])), Step(3, PauliString.on(4, "X", [3]))]
    return theorem1_certify(e, (0, 1), steps)


# --------------------------------------------------------------------------- chained sweep


def chained_singlet_fraction(n: int, mode: str = "float") -> float:
    """Local fraction of the singlet under ``n`` chained planar settings per party."""
    b = dense.born_table(dense.singlet(), dense.chained_measurements(n))
    return float(local_fraction(b, mode).value)


def chained_bound(n: int) -> float:
    """Closed-form ceiling ``N (1 - cos(pi / 2N))`` on the chained local fraction."""
    return n * (1 - math.cos(math.pi / (2 * n)))


def chained_sweep(n_values: Sequence[int]) -> list[tuple[int, float]]:
    """``(N, p_L)`` rows; each value is an upper bound on the singlet's local fraction."""
    rows = []
    for n in n_values:
        if n < 2:
            raise InputError(f"chained sweep needs N >= 2, got {n}")
        rows.append((n, chained_singlet_fraction(n)))
    return rows


__all__ = [
    "CAVEAT", "Certificate", "FAIL", "LeafAudit", "PASS", "canonical_json",
    "certify_graph", "certify_smolin", "chained_bound", "chained_singlet_fraction", "chained_sweep",
    "covering_is_consistent", "graph_pair_protocol", "protocol_hash", "replay", "smolin_pair_protocol",
    "smolin_protocol_doc", "smolin_single_copy_control", "theorem1_certify", "theorem2_certify",
]
