"""Stabilizer tableaux, finite stabilizer ensembles and exhaustive Pauli-measurement protocols.

Tableaux follow the Aaronson-Gottesman layout: rows ``0..n-1`` are destabilizers,
rows ``n..2n-1`` stabilizers.  Row phases are stored as exponents of ``i``
(mod 4); the Pauli on qubit ``j`` is ``X`` for ``(x, z) = (1, 0)``, ``Z`` for
``(0, 1)`` and ``Y`` for ``(1, 1)``.

Every array routine below accepts phase arrays with a trailing batch axis.  A
batch is a set of states that share their X/Z structure and differ only in
signs (for instance the 1024 pure branches of five Smolin copies); one pass of
the tableau algorithm then serves the whole batch.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, LocalityViolation
from .scenario import RATIONAL, Behavior, Scenario

_LETTER = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_NAME = {v: k for k, v in _LETTER.items()}


# --------------------------------------------------------------------------- Pauli strings


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of single-qubit Paulis."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        if len(self.x) != len(self.z):
            raise InputError("x and z parts differ in length")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse a dense label such as ``"+XIZ"``, ``"-YY"`` or ``"iZ"``."""
        m = re.fullmatch(r"([+-]?)(i?)([IXYZ]+)", label.strip())
        if not m:
            raise InputError(f"bad Pauli label {label!r}")
        phase = (2 if m.group(1) == "-" else 0) + (1 if m.group(2) else 0)
        bits = [_LETTER[c] for c in m.group(3)]
        return cls(tuple(b[0] for b in bits), tuple(b[1] for b in bits), phase)

    @classmethod
    def on(cls, n: int, letters: str, qubits: Sequence[int], sign: int = 1) -> PauliString:
        """Sparse constructor: ``letters[k]`` acts on ``qubits[k]``."""
        if len(letters) != len(qubits):
            raise InputError("one Pauli letter per qubit is required")
        if len(set(qubits)) != len(qubits):
            raise InputError("repeated qubit in Pauli word")
        x, z = [0] * n, [0] * n
        for c, q in zip(letters, qubits):
            if not 0 <= q < n:
                raise InputError(f"qubit {q} out of range for {n} qubits")
            x[q], z[q] = _LETTER[c]
        return cls(tuple(x), tuple(z), 0 if sign == 1 else 2)

    @classmethod
    def parse_word(cls, word: str, n: int) -> PauliString:
        """Parse the protocol-file form ``"XZ_(3,7)"`` (optionally signed, ``"-XX_(0,1)"``)."""
        m = re.fullmatch(r"\s*([+-]?)([IXYZ]+)_\(([\d,\s]+)\)\s*", word)
        if not m:
            raise InputError(f"bad sparse Pauli word {word!r}")
        qubits = [int(q) for q in m.group(3).split(",") if q.strip()]
        return cls.on(n, m.group(2), qubits, -1 if m.group(1) == "-" else 1)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n) if self.x[q] or self.z[q])

    def commutes(self, other: PauliString) -> bool:
        s = sum(a * d + b * c for a, b, c, d in zip(self.x, self.z, other.x, other.z))
        return s % 2 == 0

    def word(self) -> str:
        sup = self.support
        sign = {0: "", 1: "i", 2: "-", 3: "-i"}[self.phase]
        letters = "".join(_NAME[(self.x[q], self.z[q])] for q in sup)
        return f"{sign}{letters}_({','.join(map(str, sup))})"

    def __str__(self) -> str:
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return sign + "".join(_NAME[(a, b)] for a, b in zip(self.x, self.z))

    def matrix(self) -> np.ndarray:
        single = {(0, 0): np.eye(2), (1, 0): np.array([[0, 1], [1, 0]]),
                  (0, 1): np.diag([1, -1]), (1, 1): np.array([[0, -1j], [1j, 0]])}
        out = np.array([[1.0 + 0j]])
        for a, b in zip(self.x, self.z):
            out = np.kron(out, single[(a, b)])
        return (1j ** self.phase) * out


# --------------------------------------------------------------------------- array kernels


def _g_sum(x1, z1, x2, z2) -> int:
    """Exponent of ``i`` picked up when multiplying Pauli rows ``P1 * P2`` (summed over qubits)."""
    x1, z1, x2, z2 = (np.asarray(v, dtype=np.int64) for v in (x1, z1, x2, z2))
    g = np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )
    return int(g.sum())


def _rowmul(x, z, r, h: int, i: int) -> None:
    """Row ``h`` <- row ``i`` times row ``h`` (phases tracked for every batch column)."""
    g = _g_sum(x[i], z[i], x[h], z[h])
    r[h] = (r[h] + r[i] + g) % 4
    x[h] ^= x[i]
    z[h] ^= z[i]


def _anti(x, z, px, pz) -> np.ndarray:
    return ((x.astype(np.int64) @ pz + z.astype(np.int64) @ px) % 2).astype(bool)


def _measure(x, z, r, px, pz, pphase: int, forced: int | None = None):
    """Measure Hermitian Pauli ``(px, pz, pphase)`` in place.

    Returns ``(random, outcome)``: when ``random`` the caller supplied ``forced``
    (0 or 1) for the post-measurement sign; otherwise ``outcome`` is the
    deterministic bit per batch column.
    """
    n = x.shape[1]
    anti = _anti(x, z, px, pz)
    stab_anti = np.nonzero(anti[n:])[0]
    if len(stab_anti):
        if forced is None:
            raise ValueError("random measurement needs a forced outcome")
        p = n + int(stab_anti[0])
        for j in np.nonzero(anti)[0]:
            if j != p:
                _rowmul(x, z, r, int(j), p)
        x[p - n], z[p - n], r[p - n] = x[p], z[p], r[p]
        x[p], z[p] = px, pz
        r[p] = (pphase + 2 * forced) % 4
        return True, forced
    sx = np.zeros(n, dtype=np.uint8)
    sz = np.zeros(n, dtype=np.uint8)
    sr = np.zeros(r.shape[1:], dtype=np.int64)
    for i in np.nonzero(anti[:n])[0]:
        row = n + int(i)
        g = _g_sum(x[row], z[row], sx, sz)
        sr = (sr + r[row] + g) % 4
        sx ^= x[row]
        sz ^= z[row]
    # The state is a +1 eigenvector of i^sr * P_bare, and the observable is i^pphase * P_bare.
    outcome = ((pphase - sr) % 4) // 2
    return False, outcome


def gf2_rank(rows: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    basis: dict[int, int] = {}
    for row in np.asarray(rows, dtype=np.uint8):
        v = int("".join(map(str, row)), 2) if len(row) else 0
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def _entropy(x, z, subset: Sequence[int]) -> int:
    n = x.shape[1]
    cols = list(subset)
    if not cols:
        return 0
    block = np.concatenate([x[n:, cols], z[n:, cols]], axis=1)
    return gf2_rank(block) - len(cols)


def _reduced_group(x, z, r, subset: Sequence[int]):
    """Canonical generators of the stabilizer subgroup supported on ``subset``.

    Returns ``(bits, signs)`` where ``bits`` is a tuple of row tuples restricted
    to ``subset`` (x-part then z-part, reduced row echelon form) and ``signs``
    has shape ``(rows,) + batch``.  The echelon form of a subgroup is unique, so
    equal groups give equal keys.
    """
    n = x.shape[1]
    sx, sz, sr = x[n:].copy(), z[n:].copy(), r[n:].copy()
    outside = [q for q in range(n) if q not in set(subset)]
    pool = list(range(n))

    def eliminate(cols, keep_pivots):
        piv_rows = []
        for col_arr, q in cols:
            arr = sx if col_arr == 0 else sz
            cand = [i for i in pool if arr[i, q]]
            if not cand:
                continue
            p = cand[0]
            for i in range(n):
                if i != p and arr[i, q] and (i in pool or i in piv_rows):
                    _rowmul(sx, sz, sr, i, p)
            pool.remove(p)
            piv_rows.append(p)
        if not keep_pivots:
            return []
        return piv_rows

    eliminate([(0, q) for q in outside] + [(1, q) for q in outside], keep_pivots=False)
    inside = list(subset)
    pivots = eliminate([(0, q) for q in inside] + [(1, q) for q in inside], keep_pivots=True)
    bits = tuple(tuple(int(v) for v in np.concatenate([sx[i, inside], sz[i, inside]])) for i in pivots)
    signs = np.array([sr[i] for i in pivots]) if pivots else np.zeros((0,) + sr.shape[1:], dtype=np.int64)
    return bits, signs


# --------------------------------------------------------------------------- tableau


class Tableau:
    """Pure ``n``-qubit stabilizer state with destabilizers."""

    __slots__ = ("x", "z", "r")

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.x = np.asarray(x, dtype=np.uint8)
        self.z = np.asarray(z, dtype=np.uint8)
        self.r = np.asarray(r, dtype=np.int64)
        n = self.x.shape[1]
        if self.x.shape != (2 * n, n) or self.z.shape != (2 * n, n) or self.r.shape != (2 * n,):
            raise InputError("tableau arrays have inconsistent shapes")

    @classmethod
    def zero_state(cls, n: int) -> Tableau:
        if n < 1:
            raise InputError("a tableau needs at least one qubit")
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        x[np.arange(n), np.arange(n)] = 1
        z[n + np.arange(n), np.arange(n)] = 1
        return cls(x, z, np.zeros(2 * n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def copy(self) -> Tableau:
        return Tableau(self.x.copy(), self.z.copy(), self.r.copy())

    # gates (in place, chainable)
    def h(self, q: int) -> Tableau:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()
        return self

    def s(self, q: int) -> Tableau:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.z[:, q] ^= self.x[:, q]
        return self

    def cnot(self, c: int, t: int) -> Tableau:
        if c == t:
            raise InputError("CNOT needs distinct qubits")
        xc, zc, xt, zt = (a.astype(np.int64) for a in (self.x[:, c], self.z[:, c], self.x[:, t], self.z[:, t]))
        self.r = (self.r + 2 * (xc * zt * (xt ^ zc ^ 1))) % 4
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]
        return self

    def cz(self, a: int, b: int) -> Tableau:
        return self.h(b).cnot(a, b).h(b)

    def pauli_x(self, q: int) -> Tableau:
        self.r = (self.r + 2 * self.z[:, q]) % 4
        return self

    def pauli_z(self, q: int) -> Tableau:
        self.r = (self.r + 2 * self.x[:, q]) % 4
        return self

    def pauli_y(self, q: int) -> Tableau:
        self.r = (self.r + 2 * (self.x[:, q] ^ self.z[:, q])) % 4
        return self

    def stabilizers(self) -> list[PauliString]:
        n = self.n
        return [PauliString(tuple(self.x[i]), tuple(self.z[i]), int(self.r[i])) for i in range(n, 2 * n)]

    def _check(self, obs: PauliString) -> None:
        if obs.n != self.n:
            raise InputError(f"observable acts on {obs.n} qubits, state has {self.n}")
        if not obs.hermitian:
            raise InputError(f"observable {obs} has a non-Hermitian phase")

    def expectation(self, obs: PauliString) -> int:
        """``<obs>`` which for stabilizer states is 0 or +-1."""
        self._check(obs)
        px, pz = np.array(obs.x, dtype=np.uint8), np.array(obs.z, dtype=np.uint8)
        if _anti(self.x[self.n:], self.z[self.n:], px, pz).any():
            return 0
        _, out = _measure(self.x.copy(), self.z.copy(), self.r.copy()[:, None], px, pz, obs.phase)
        return 1 - 2 * int(out[0])

    def measure_branches(self, obs: PauliString) -> list[OutcomeBranch]:
        """All outcome branches of measuring ``obs``, each with its exact probability."""
        self._check(obs)
        px, pz = np.array(obs.x, dtype=np.uint8), np.array(obs.z, dtype=np.uint8)
        if not _anti(self.x[self.n:], self.z[self.n:], px, pz).any():
            t = self.copy()
            r = t.r[:, None]
            _, out = _measure(t.x, t.z, r, px, pz, obs.phase)
            t.r = r[:, 0]
            return [OutcomeBranch((int(out[0]),), Fraction(1), t)]
        branches = []
        for bit in (0, 1):
            t = self.copy()
            r = t.r[:, None]
            _measure(t.x, t.z, r, px, pz, obs.phase, forced=bit)
            t.r = r[:, 0]
            branches.append(OutcomeBranch((bit,), Fraction(1, 2), t))
        return branches

    def entanglement_entropy(self, subset: Iterable[int]) -> int:
        """Von Neumann entropy (bits) of the reduced state on ``subset``."""
        subset = sorted(set(subset))
        if any(not 0 <= q < self.n for q in subset):
            raise InputError(f"subset {subset} out of range")
        return _entropy(self.x, self.z, subset)

    def reduced_key(self, subset: Sequence[int]):
        """Hashable description of the stabilizer subgroup supported on ``subset``."""
        bits, signs = _reduced_group(self.x, self.z, self.r[:, None], list(subset))
        return bits, tuple(int(v) for v in signs[:, 0])

    def canonical_key(self):
        return self.reduced_key(range(self.n))

    def statevector(self) -> np.ndarray:
        """Dense amplitudes (for cross-checks on small ``n``): projector onto the stabilized line."""
        n = self.n
        if n > 12:
            raise InputError("statevector export is limited to 12 qubits")
        proj = np.eye(2 ** n, dtype=complex)
        for g in self.stabilizers():
            proj = proj @ (np.eye(2 ** n) + g.matrix()) / 2
        col = int(np.argmax(np.linalg.norm(proj, axis=0)))
        v = proj[:, col]
        return v / np.linalg.norm(v)

    def __repr__(self):
        return "Tableau(" + ", ".join(map(str, self.stabilizers())) + ")"


@dataclass(frozen=True)
class OutcomeBranch:
    outcomes: tuple[int, ...]
    probability: Fraction
    tableau: Tableau


def graph_state(adjacency) -> Tableau:
    """Graph state with generators ``X_v prod_{w~v} Z_w``; destabilizers are ``Z_v``."""
    adj = np.asarray(adjacency, dtype=np.uint8)
    n = adj.shape[0]
    if adj.shape != (n, n) or not np.array_equal(adj, adj.T):
        raise InputError("adjacency matrix must be square and symmetric")
    if adj.diagonal().any():
        raise InputError("adjacency matrix must have a zero diagonal")
    x = np.zeros((2 * n, n), dtype=np.uint8)
    z = np.zeros((2 * n, n), dtype=np.uint8)
    z[:n] = np.eye(n, dtype=np.uint8)
    x[n:] = np.eye(n, dtype=np.uint8)
    z[n:] = adj
    return Tableau(x, z, np.zeros(2 * n, dtype=np.int64))


def complete_graph(m: int) -> np.ndarray:
    return np.ones((m, m), dtype=np.uint8) - np.eye(m, dtype=np.uint8)


def adjacency_from_lists(neighbors: Sequence[Sequence[int]]) -> np.ndarray:
    n = len(neighbors)
    adj = np.zeros((n, n), dtype=np.uint8)
    for v, ws in enumerate(neighbors):
        for w in ws:
            if not 0 <= w < n:
                raise InputError(f"vertex {v} lists neighbour {w} outside 0..{n - 1}")
            adj[v, w] = 1
    return adj


def ghz_state(n: int) -> Tableau:
    t = Tableau.zero_state(n).h(0)
    for q in range(1, n):
        t.cnot(0, q)
    return t


# Bell label k -> (XX sign bit, ZZ sign bit): Phi+, Phi-, Psi+, Psi-.
BELL_SIGNS = ((0, 0), (1, 0), (0, 1), (1, 1))


def bell_pair(t: Tableau, a: int, b: int, label: int = 0) -> Tableau:
    """Prepare Bell state ``label`` on fresh qubits ``a, b`` of ``t`` (assumed in |00>)."""
    t.h(a).cnot(a, b)
    sx, sz = BELL_SIGNS[label]
    if sz:
        t.pauli_x(b)
    if sx:
        t.pauli_z(a)
    return t


# --------------------------------------------------------------------------- ensembles


@dataclass
class StabilizerEnsemble:
    """Finite mixture of pure stabilizer states with exact rational weights.

    ``owners[q]`` names the party holding qubit ``q``; by default each qubit is its
    own party.
    """

    branches: list[tuple[Fraction, Tableau]]
    owners: tuple[int, ...] | None = None
    name: str = "ensemble"

    def __post_init__(self):
        if not self.branches:
            raise InputError("an ensemble needs at least one branch")
        n = self.branches[0][1].n
        total = Fraction(0)
        fixed = []
        for w, t in self.branches:
            w = Fraction(w)
            if w <= 0:
                raise InputError("ensemble weights must be positive")
            if t.n != n:
                raise InputError("ensemble branches act on different qubit counts")
            total += w
            fixed.append((w, t))
        if total != 1:
            raise InputError(f"ensemble weights sum to {total}, not 1")
        self.branches = fixed
        if self.owners is None:
            self.owners = tuple(range(n))
        self.owners = tuple(int(o) for o in self.owners)
        if len(self.owners) != n:
            raise InputError("ownership map must name one party per qubit")

    @classmethod
    def pure(cls, t: Tableau, owners=None, name: str = "pure") -> StabilizerEnsemble:
        return cls([(Fraction(1), t)], owners, name)

    @property
    def n(self) -> int:
        return self.branches[0][1].n

    @property
    def parties(self) -> int:
        return max(self.owners) + 1

    def qubits_of(self, party: int) -> tuple[int, ...]:
        return tuple(q for q, o in enumerate(self.owners) if o == party)

    def entanglement_entropies(self, subset) -> list[int]:
        return [t.entanglement_entropy(subset) for _, t in self.branches]


SMOLIN_COPIES = ("ABCD", "ABCE", "ABDE", "ACDE", "BCDE")


def smolin_state() -> StabilizerEnsemble:
    """Four-qubit Smolin state: uniform mixture of ``|psi_k>_AB |psi_k>_CD`` over the Bell basis."""
    branches = []
    for k in range(4):
        t = Tableau.zero_state(4)
        bell_pair(t, 0, 1, k)
        bell_pair(t, 2, 3, k)
        branches.append((Fraction(1, 4), t))
    return StabilizerEnsemble(branches, (0, 1, 2, 3), name="smolin")


def smolin_five_copies() -> StabilizerEnsemble:
    """Five Smolin copies on parties ABCD, ABCE, ABDE, ACDE, BCDE (20 qubits, 1024 branches).

    Qubit ``4*c + k`` is the ``k``-th member of copy ``c``; each party owns four qubits.
    """
    owners = tuple("ABCDE".index(p) for copy in SMOLIN_COPIES for p in copy)
    base = Tableau.zero_state(20)
    for c in range(5):
        bell_pair(base, 4 * c, 4 * c + 1)
        bell_pair(base, 4 * c + 2, 4 * c + 3)
    branches = []
    w = Fraction(1, 4 ** 5)
    for labels in itertools.product(range(4), repeat=5):
        t = base.copy()
        for c, k in enumerate(labels):
            sx, sz = BELL_SIGNS[k]
            for a, b in ((4 * c, 4 * c + 1), (4 * c + 2, 4 * c + 3)):
                if sz:
                    t.pauli_x(b)
                if sx:
                    t.pauli_z(a)
        branches.append((w, t))
    return StabilizerEnsemble(branches, owners, name="smolin-x5")


def smolin_qubit(copy: str, party: str) -> int:
    """Qubit index of ``party``'s share of Smolin copy ``copy`` in :func:`smolin_five_copies`."""
    c = SMOLIN_COPIES.index(copy)
    return 4 * c + copy.index(party)


# --------------------------------------------------------------------------- protocols


@dataclass(frozen=True)
class Step:
    """One measurement by ``party``; runs only if ``condition`` (step index, bit) holds."""

    party: int
    observable: PauliString
    condition: tuple[int, int] | None = None

    def to_json(self) -> dict:
        doc = {"party": self.party, "observable": self.observable.word()}
        if self.condition is not None:
            doc["condition"] = {"step": self.condition[0], "equals": self.condition[1]}
        return doc


def protocol_from_json(doc: list, n: int) -> list[Step]:
    steps = []
    for k, item in enumerate(doc):
        try:
            cond = item.get("condition")
            steps.append(Step(int(item["party"]), PauliString.parse_word(item["observable"], n),
                              None if cond is None else (int(cond["step"]), int(cond["equals"]))))
        except (KeyError, TypeError, AttributeError) as exc:
            raise InputError(f"protocol step {k} is malformed: {exc}") from None
    return steps


def protocol_to_json(steps: Sequence[Step]) -> list[dict]:
    return [s.to_json() for s in steps]


def check_protocol(steps: Sequence[Step], owners: Sequence[int], allowed: Iterable[int] | None = None) -> None:
    """Raise :class:`LocalityViolation` unless every step is local to its party."""
    allowed = None if allowed is None else set(allowed)
    for k, st in enumerate(steps):
        if allowed is not None and st.party not in allowed:
            raise LocalityViolation(f"step {k}: party {st.party} is not a designated measuring party")
        if not st.observable.hermitian:
            raise InputError(f"step {k}: observable {st.observable} is not Hermitian")
        if st.observable.n != len(owners):
            raise InputError(f"step {k}: observable acts on {st.observable.n} qubits, state has {len(owners)}")
        for q in st.observable.support:
            if owners[q] != st.party:
                raise LocalityViolation(f"step {k}: party {st.party} measures qubit {q} owned by party {owners[q]}")
        if st.condition is not None:
            j, _ = st.condition
            if not 0 <= j < k:
                raise LocalityViolation(f"step {k}: condition refers to step {j}, which is not earlier")
            if steps[j].party != st.party:
                raise LocalityViolation(f"step {k}: party {st.party} adapts on party {steps[j].party}'s outcome")


SKIPPED = -1


@dataclass
class BranchBatch:
    """Leaves sharing one X/Z tableau structure.

    ``members`` indexes ensemble branches; ``r`` holds their phases (column per
    member); ``weights`` are exact leaf weights; ``records[k]`` holds each
    member's outcome of step ``k`` (``SKIPPED`` when its condition failed).
    """

    x: np.ndarray
    z: np.ndarray
    r: np.ndarray
    members: np.ndarray
    weights: list[Fraction]
    records: list[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def outcome_records(self) -> list[tuple[int, ...]]:
        if not self.records:
            return [()] * len(self)
        return [tuple(int(v) for v in col) for col in np.stack(self.records).T]

    def tableau(self, k: int) -> Tableau:
        return Tableau(self.x.copy(), self.z.copy(), self.r[:, k].copy())

    def entropy(self, subset) -> int:
        return _entropy(self.x, self.z, sorted(subset))

    def reduced_keys(self, subset) -> list:
        bits, signs = _reduced_group(self.x, self.z, self.r, list(subset))
        return [(bits, tuple(int(v) for v in signs[:, k])) for k in range(len(self))]

    def _select(self, mask: np.ndarray) -> BranchBatch:
        idx = np.nonzero(mask)[0]
        return BranchBatch(self.x.copy(), self.z.copy(), self.r[:, idx].copy(), self.members[idx],
                           [self.weights[i] for i in idx], [rec[idx] for rec in self.records])


@dataclass
class ProtocolRun:
    batches: list[BranchBatch]
    steps: list[Step]

    def total_weight(self) -> Fraction:
        return sum((w for b in self.batches for w in b.weights), Fraction(0))

    def leaves(self, merge: bool = True) -> list[tuple[Fraction, tuple[int, ...], Tableau]]:
        """Materialized leaves in canonical outcome-lexicographic order.

        With ``merge`` identical (outcome record, post-state) leaves are combined.
        """
        acc: dict = {}
        order = []
        for b in self.batches:
            for k, rec in enumerate(b.outcome_records()):
                t = b.tableau(k)
                key = (rec, t.canonical_key()) if merge else (rec, len(order))
                if key in acc:
                    acc[key][0] += b.weights[k]
                else:
                    acc[key] = [b.weights[k], t]
                    order.append(key)
        out = [(acc[k][0], k[0], acc[k][1]) for k in order]
        out.sort(key=lambda leaf: leaf[1])
        return out


def _group_ensemble(e: StabilizerEnsemble) -> list[BranchBatch]:
    groups: dict = {}
    for i, (w, t) in enumerate(e.branches):
        groups.setdefault((t.x.tobytes(), t.z.tobytes()), []).append(i)
    batches = []
    for idx in groups.values():
        t0 = e.branches[idx[0]][1]
        r = np.stack([e.branches[i][1].r for i in idx], axis=1)
        batches.append(BranchBatch(t0.x.copy(), t0.z.copy(), r, np.array(idx),
                                   [e.branches[i][0] for i in idx]))
    return batches


def run_protocol(e: StabilizerEnsemble, steps: Sequence[Step], allowed_parties: Iterable[int] | None = None
                 ) -> ProtocolRun:
    """Enumerate every positive-probability leaf of a local Pauli measurement protocol."""
    steps = list(steps)
    check_protocol(steps, e.owners, allowed_parties)
    frontier = _group_ensemble(e)
    for k, st in enumerate(steps):
        px = np.array(st.observable.x, dtype=np.uint8)
        pz = np.array(st.observable.z, dtype=np.uint8)
        nxt = []
        for b in frontier:
            if st.condition is not None:
                j, want = st.condition
                active = b.records[j] == want
                if not active.all():
                    if (~active).any():
                        skip = b._select(~active)
                        skip.records.append(np.full(len(skip), SKIPPED))
                        nxt.append(skip)
                    if not active.any():
                        continue
                    b = b._select(active)
            n = b.x.shape[1]
            if _anti(b.x[n:], b.z[n:], px, pz).any():
                for bit in (0, 1):
                    c = BranchBatch(b.x.copy(), b.z.copy(), b.r.copy(), b.members,
                                    [w / 2 for w in b.weights], list(b.records))
                    _measure(c.x, c.z, c.r, px, pz, st.observable.phase, forced=bit)
                    c.records.append(np.full(len(c), bit))
                    nxt.append(c)
            else:
                _, out = _measure(b.x, b.z, b.r, px, pz, st.observable.phase)
                b.records.append(np.asarray(out, dtype=np.int64).reshape(len(b)))
                nxt.append(b)
        frontier = nxt
    return ProtocolRun(frontier, steps)


# --------------------------------------------------------------------------- exact Born tables


def outcome_distribution(t: Tableau, observables: Sequence[PauliString]) -> dict[tuple[int, ...], Fraction]:
    """Joint distribution of measuring commuting ``observables`` in sequence."""
    dist: dict[tuple[int, ...], Fraction] = {}

    def rec(state: Tableau, k: int, prefix: tuple[int, ...], p: Fraction):
        if k == len(observables):
            dist[prefix] = dist.get(prefix, Fraction(0)) + p
            return
        for br in state.measure_branches(observables[k]):
            rec(br.tableau, k + 1, prefix + br.outcomes, p * br.probability)

    rec(t, 0, (), Fraction(1))
    return dist


def born_table_stabilizer(e: StabilizerEnsemble, settings: Sequence[Sequence[PauliString]]) -> Behavior:
    """Exact rational behavior of ``e`` under per-party Pauli settings (outcome 0 is eigenvalue +1)."""
    m = e.parties
    if len(settings) != m:
        raise InputError(f"need settings for {m} parties, got {len(settings)}")
    for party, obs_list in enumerate(settings):
        for obs in obs_list:
            if obs.n != e.n:
                raise InputError("observable size does not match the ensemble")
            if not obs.hermitian:
                raise InputError(f"observable {obs} is not Hermitian")
            for q in obs.support:
                if e.owners[q] != party:
                    raise InputError(f"setting of party {party} acts on qubit {q} owned by party {e.owners[q]}")
    sc = Scenario(tuple(len(s) for s in settings), (2,) * m)
    table = np.empty(sc.shape, dtype=object)
    for x in sc.setting_tuples():
        obs = [settings[i][x[i]] for i in range(m)]
        acc: dict = {}
        for w, t in e.branches:
            for a, p in outcome_distribution(t, obs).items():
                acc[a] = acc.get(a, Fraction(0)) + w * p
        for a in sc.outcome_tuples():
            table[x + a] = acc.get(a, Fraction(0))
    return Behavior(sc, table, RATIONAL)


def single_qubit_settings(n: int, letters_per_party: Sequence[str]) -> list[list[PauliString]]:
    """Per-party settings for one-qubit-per-party states, e.g. ``["XY", "XY", "XY"]``."""
    return [[PauliString.on(n, c, [q]) for c in letters] for q, letters in enumerate(letters_per_party)]
