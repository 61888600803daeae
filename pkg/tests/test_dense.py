from __future__ import annotations

import math

import numpy as np
import pytest

from nonloc import dense
from nonloc.errors import InputError, ZeroProbabilityError
from nonloc.scenario import Bipartition, validate


def test_tsirelson_correlators_from_planar_settings():
    b = dense.born_table(dense.bell_state("phi+"), dense.planar_family([[0, math.pi / 2], [math.pi / 4, -math.pi / 4]]))
    e = {x: b.correlator(x) for x in b.scenario.setting_tuples()}
    chsh = e[(0, 0)] + e[(0, 1)] + e[(1, 0)] - e[(1, 1)]
    assert chsh == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_singlet_correlator_is_minus_cosine():
    for ta, tb in [(0.0, 0.3), (1.1, -0.4), (2.0, 2.0)]:
        b = dense.born_table(dense.singlet(), dense.planar_family([[ta], [tb]]))
        assert b.correlator((0, 0)) == pytest.approx(-math.cos(ta - tb), abs=1e-12)


def test_born_table_of_random_instances_is_valid():
    rng = np.random.default_rng(0)
    for _ in range(10):
        st = dense.random_state((2, 3), rng)
        b = dense.born_table(st, dense.random_projective_family((2, 3), 2, rng))
        assert validate(b).ok


def test_partial_measure_on_ghz():
    p, post = dense.partial_measure(dense.ghz(3), [1], [dense.projectors(dense.X)[0]])
    assert p == pytest.approx(0.5)
    assert dense.is_maximally_entangled(dense.PureState(post.amplitudes, post.dims), [0])
    with pytest.raises(ZeroProbabilityError):
        dense.partial_measure(dense.ket("00"), [0], [dense.projectors(dense.Z)[1]])
    with pytest.raises(InputError):
        dense.partial_measure(dense.ket("00"), [0], [np.eye(2) * 0.5])


def test_maximal_entanglement_and_schmidt():
    assert dense.is_maximally_entangled(dense.singlet(), Bipartition.of([0], 2))
    assert not dense.is_maximally_entangled(dense.ket("01"), [0])
    assert np.allclose(dense.schmidt_coefficients(dense.bell_state("psi+"), [0]), [2 ** -0.5] * 2)
    assert dense.entropy_bits(dense.reduced_density(dense.ghz(4), [0, 1])) == pytest.approx(1)


def test_state_and_measurement_json_round_trip():
    st = dense.ghz(3)
    again = dense.state_from_json(dense.state_to_json(st))
    assert np.allclose(again.amplitudes, st.amplitudes)
    meas = dense.chained_measurements(3)
    back = dense.measurement_from_json(dense.measurement_to_json(meas))
    assert back.scenario == meas.scenario


def test_input_checks():
    with pytest.raises(InputError):
        dense.PureState(np.array([1, 1]), (2,))
    with pytest.raises(InputError):
        dense.chained_measurements(1)
    with pytest.raises(InputError):
        dense.PureState(np.ones(2 ** 13) / 2 ** 6.5, (2,) * 13)
    with pytest.raises(InputError):
        dense.born_table(dense.ghz(3), dense.pauli_family(["X", "X"]))
