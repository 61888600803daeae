"""Dense state-vector / density-matrix simulator for small systems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ZeroProbabilityError
from .scenario import FLOAT, Behavior, Bipartition, Scenario

QUBIT_CAP = 12
NORM_TOL = 1e-12
PSD_TOL = 1e-10
ENTANGLEMENT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 2 for d in dims):
        raise InputError(f"local dimensions must be >= 2, got {dims}")
    if math.prod(dims) > 2 ** QUBIT_CAP:
        raise InputError(f"dense simulation is capped at {QUBIT_CAP} qubits")
    return dims


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size != math.prod(dims):
            raise InputError(f"{amp.size} amplitudes do not match dims {dims}")
        if abs(np.linalg.norm(amp) - 1) > NORM_TOL:
            raise InputError(f"state norm {np.linalg.norm(amp):.15f} is not 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes, dims) -> PureState:
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amp / np.linalg.norm(amp), dims)

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        rho = np.asarray(self.matrix, dtype=complex)
        d = math.prod(dims)
        if rho.shape != (d, d):
            raise InputError(f"density matrix shape {rho.shape} does not match dims {dims}")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise InputError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > NORM_TOL:
            raise InputError(f"density matrix trace {np.trace(rho).real} is not 1")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise InputError("density matrix is not positive semidefinite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", rho)


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """``effects[party][setting][outcome]`` is a positive operator on that party's space."""

    effects: tuple

    def __post_init__(self):
        parties = []
        for i, settings in enumerate(self.effects):
            if not settings:
                raise InputError(f"party {i} has no settings")
            fixed = []
            for x, outs in enumerate(settings):
                mats = [np.asarray(e, dtype=complex) for e in outs]
                if len(mats) < 2:
                    raise InputError(f"party {i} setting {x} needs at least two outcomes")
                d = mats[0].shape[0]
                if any(mm.shape != (d, d) for mm in mats):
                    raise InputError(f"party {i} setting {x} mixes effect dimensions")
                if np.max(np.abs(sum(mats) - np.eye(d))) > NORM_TOL:
                    raise InputError(f"party {i} setting {x}: effects do not sum to identity")
                for a, e in enumerate(mats):
                    if np.max(np.abs(e - e.conj().T)) > NORM_TOL or np.linalg.eigvalsh(e).min() < -PSD_TOL:
                        raise InputError(f"party {i} setting {x} outcome {a}: effect is not positive")
                fixed.append(tuple(mats))
            if len({len(s) for s in fixed}) != 1:
                raise InputError(f"party {i}: every setting must have the same outcome count")
            parties.append(tuple(fixed))
        object.__setattr__(self, "effects", tuple(parties))

    @property
    def scenario(self) -> Scenario:
        return Scenario(tuple(len(s) for s in self.effects), tuple(len(s[0]) for s in self.effects))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s[0][0].shape[0] for s in self.effects)


def projectors(observable: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(P_+, P_-)`` for an observable with eigenvalues +-1."""
    obs = np.asarray(observable, dtype=complex)
    d = obs.shape[0]
    return (np.eye(d) + obs) / 2, (np.eye(d) - obs) / 2


def planar_observable(theta: float) -> np.ndarray:
    """``cos(theta) Z + sin(theta) X``: Bloch direction at angle ``theta`` in the X-Z plane."""
    return math.cos(theta) * Z + math.sin(theta) * X


def pauli_family(letters_per_party: Sequence[str]) -> MeasurementFamily:
    return MeasurementFamily(tuple(tuple(projectors(PAULI[c]) for c in letters) for letters in letters_per_party))


def planar_family(angles_per_party: Sequence[Sequence[float]]) -> MeasurementFamily:
    return MeasurementFamily(tuple(tuple(projectors(planar_observable(t)) for t in angles)
                                   for angles in angles_per_party))


def chained_measurements(n: int) -> MeasurementFamily:
    """Chained-Bell planar settings: ``A_k = (k-1) pi/N``, ``B_k = (2k-1) pi/(2N)``."""
    if n < 2:
        raise InputError("chained measurements need N >= 2")
    a = [(k - 1) * math.pi / n for k in range(1, n + 1)]
    b = [(2 * k - 1) * math.pi / (2 * n) for k in range(1, n + 1)]
    return planar_family([a, b])


def _as_density(state) -> DensityOperator:
    if isinstance(state, PureState):
        return state.density()
    if isinstance(state, DensityOperator):
        return state
    raise InputError(f"expected PureState or DensityOperator, got {type(state).__name__}")


def born_table(state, meas: MeasurementFamily, eps: float = 1e-9) -> Behavior:
    """Float behavior ``P(a|x) = tr(rho M_x1^a1 (x) ... (x) M_xm^am)``."""
    rho = _as_density(state)
    if rho.dims != meas.dims:
        raise InputError(f"state dims {rho.dims} do not match measurement dims {meas.dims}")
    m = len(rho.dims)
    sc = meas.scenario
    rt = rho.matrix.reshape(rho.dims + rho.dims)
    table = np.empty(sc.shape, dtype=float)
    for x in sc.setting_tuples():
        t = rt
        # Contract each party's bra/ket pair with its stacked effects; the outcome axis goes last.
        for i in range(m):
            stack = np.stack(meas.effects[i][x[i]])  # (o, d, d)
            t = np.tensordot(t, stack, axes=([0, m - i], [2, 1]))
        table[x] = np.real(t)
    table[np.abs(table) < 1e-15] = 0.0
    return Behavior(sc, table, FLOAT, eps)


def _apply_local(psi: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(op, psi, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def partial_measure(state: PureState, parties: Sequence[int], effects: Sequence[np.ndarray],
                    tol: float = 1e-14) -> tuple[float, PureState]:
    """Project ``parties`` with one projector each; return the probability and renormalized state."""
    if len(parties) != len(effects):
        raise InputError("one effect per measured party is required")
    psi = state.tensor()
    for q, e in zip(parties, effects):
        e = np.asarray(e, dtype=complex)
        if e.shape != (state.dims[q], state.dims[q]):
            raise InputError(f"effect for party {q} has shape {e.shape}")
        if np.max(np.abs(e @ e - e)) > NORM_TOL or np.max(np.abs(e - e.conj().T)) > NORM_TOL:
            raise InputError(f"effect for party {q} is not a projector")
        psi = _apply_local(psi, e, q)
    p = float(np.vdot(psi, psi).real)
    if p <= tol:
        raise ZeroProbabilityError(f"branch has probability {p:.3g}")
    return p, PureState(psi.reshape(-1) / math.sqrt(p), state.dims)


def reduced_density(state: PureState, keep: Iterable[int]) -> np.ndarray:
    keep = sorted(set(keep))
    m = len(state.dims)
    drop = [i for i in range(m) if i not in keep]
    psi = np.transpose(state.tensor(), keep + drop)
    dk = math.prod(state.dims[i] for i in keep)
    mat = psi.reshape(dk, -1)
    return mat @ mat.conj().T


def schmidt_coefficients(state: PureState, block: Iterable[int]) -> np.ndarray:
    block = sorted(set(block))
    m = len(state.dims)
    rest = [i for i in range(m) if i not in block]
    psi = np.transpose(state.tensor(), block + rest)
    mat = psi.reshape(math.prod(state.dims[i] for i in block), -1)
    return np.linalg.svd(mat, compute_uv=False)


def is_maximally_entangled(state: PureState, cut: Bipartition | Iterable[int], tol: float = ENTANGLEMENT_TOL
                           ) -> bool:
    """True iff the smaller side of ``cut`` is maximally mixed (all Schmidt coefficients equal)."""
    m = len(state.dims)
    if isinstance(cut, Bipartition):
        if cut.m != m:
            raise InputError(f"cut over {cut.m} parties, state has {m}")
        side_a, side_b = cut.block_a, cut.block_b
    else:
        side_a = tuple(sorted(set(cut)))
        side_b = tuple(i for i in range(m) if i not in side_a)
        if not side_a or not side_b:
            raise InputError("both sides of the cut must be nonempty")
    da = math.prod(state.dims[i] for i in side_a)
    db = math.prod(state.dims[i] for i in side_b)
    small = side_a if da <= db else side_b
    red = reduced_density(state, small)
    d = red.shape[0]
    return bool(np.max(np.abs(red - np.eye(d) / d)) <= tol)


def entropy_bits(rho: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(rho)
    ev = ev[ev > 1e-14]
    return float(-(ev * np.log2(ev)).sum())


# --------------------------------------------------------------------------- standard states


def ket(bits: str) -> PureState:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return PureState(v, (2,) * len(bits))


def bell_state(label: str = "phi+") -> PureState:
    s = 1 / math.sqrt(2)
    vec = {"phi+": [s, 0, 0, s], "phi-": [s, 0, 0, -s], "psi+": [0, s, s, 0], "psi-": [0, s, -s, 0]}[label]
    return PureState(np.array(vec, dtype=complex), (2, 2))


def singlet() -> PureState:
    return bell_state("psi-")


def ghz(n: int) -> PureState:
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return PureState(v, (2,) * n)


def apply_unitary(state: PureState, u: np.ndarray, parties: Sequence[int]) -> PureState:
    """Apply ``u`` (acting on the listed parties, in order) to a pure state."""
    parties = list(parties)
    psi = np.moveaxis(state.tensor(), parties, list(range(len(parties))))
    shp = psi.shape
    k = math.prod(state.dims[i] for i in parties)
    psi = (np.asarray(u, dtype=complex) @ psi.reshape(k, -1)).reshape(shp)
    psi = np.moveaxis(psi, list(range(len(parties))), parties)
    return PureState(psi.reshape(-1), state.dims)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    d = math.prod(dims)
    return PureState.normalized(rng.normal(size=d) + 1j * rng.normal(size=d), tuple(dims))


def random_projective_family(dims: Sequence[int], settings: int, rng: np.random.Generator) -> MeasurementFamily:
    """Random orthonormal-basis measurements (outcome count = local dimension)."""
    parties = []
    for d in dims:
        sets = []
        for _ in range(settings):
            u = random_unitary(d, rng)
            sets.append(tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(d)))
        parties.append(tuple(sets))
    return MeasurementFamily(tuple(parties))


# --------------------------------------------------------------------------- file formats


def state_to_json(state: PureState) -> dict:
    return {"dims": list(state.dims), "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes]}


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise InputError(f"complex entry {v!r} must be [re, im]")


def state_from_json(doc: dict):
    """PureState from ``{dims, amplitudes}`` or DensityOperator from ``{dims, density}``."""
    try:
        dims = tuple(doc["dims"])
        if "amplitudes" in doc:
            return PureState(np.array([_complex(v) for v in doc["amplitudes"]]), dims)
        rows = doc["density"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"state document lacks field {exc}") from None
    return DensityOperator(np.array([[_complex(v) for v in row] for row in rows]), dims)


def measurement_from_json(doc: dict) -> MeasurementFamily:
    try:
        parties = doc["parties"]
        effects = tuple(
            tuple(tuple(np.array([[_complex(v) for v in row] for row in eff]) for eff in setting)
                  for setting in party)
            for party in parties)
    except (KeyError, TypeError) as exc:
        raise InputError(f"measurement document lacks field {exc}") from None
    return MeasurementFamily(effects)


def measurement_to_json(meas: MeasurementFamily) -> dict:
    def mat(e):
        return [[[float(v.real), float(v.imag)] for v in row] for row in e]
    return {"parties": [[[mat(e) for e in setting] for setting in party] for party in meas.effects]}
