from __future__ import annotations

import itertools
import math

import pytest

from nonloc import dense
from nonloc.certifier import (CAVEAT, FAIL, PASS, Certificate, certify_graph, certify_smolin, chained_bound,
                              chained_sweep, covering_is_consistent, graph_pair_protocol, replay,
                              smolin_pair_protocol, smolin_protocol_doc, smolin_single_copy_control,
                              theorem1_certify, theorem2_certify)
from nonloc.epr2 import bipartition_local_fraction, local_fraction
from nonloc.errors import InputError, LocalityViolation
from nonloc.scenario import Bipartition, condition
from nonloc.stabilizer import (PauliString, StabilizerEnsemble, Step, complete_graph, ghz_state, graph_state,
                               smolin_five_copies)


def _x_on(n, q):
    return [Step(q, PauliString.on(n, "X", [q]))]


def test_ghz_x_measurement_passes():
    cert = theorem1_certify(ghz_state(3), (0, 2), _x_on(3, 1))
    assert cert.verdict == PASS and len(cert.leaves) == 2
    assert sum(leaf.weight for leaf in cert.leaves) == 1
    assert cert.to_json()["basis"] == "theorem"


def test_ghz_z_measurement_fails_at_first_leaf():
    cert = theorem1_certify(ghz_state(3), (0, 2), [Step(1, PauliString.on(3, "Z", [1]))])
    assert cert.verdict == FAIL and cert.first_failure == 0
    doc = cert.to_json()
    assert doc["caveat"] == CAVEAT
    assert "not fully nonlocal" not in str(doc)


def test_dense_path_agrees_and_is_labeled_numerical():
    ok = theorem1_certify(dense.ghz(3), (0, 2), _x_on(3, 1))
    bad = theorem1_certify(dense.ghz(3), (0, 2), [Step(1, PauliString.on(3, "Z", [1]))])
    assert ok.verdict == PASS and bad.verdict == FAIL
    assert ok.method == "numerical (tol=1e-9)"
    assert [leaf.outcomes for leaf in ok.leaves] == [(0,), (1,)]


def test_measuring_a_pair_member_is_rejected():
    with pytest.raises(LocalityViolation):
        theorem1_certify(ghz_state(3), (0, 2), _x_on(3, 0))
    with pytest.raises(InputError):
        theorem1_certify(ghz_state(3), (1, 1), [])
    with pytest.raises(InputError):
        theorem1_certify("ghz", (0, 1), [])


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_complete_graph_certification(m):
    cert = certify_graph(m)
    assert cert.verdict == PASS
    assert len(cert.children) == m * (m - 1) // 2
    assert all(len(c.leaves) == 2 ** (m - 2) and c.passed for c in cert.children)
    assert covering_is_consistent(cert)
    assert cert.to_json()["asserts"] == "p_NS = 1"


def test_graph_pair_protocol_matches_dense_oracle():
    m = 4
    st = dense.PureState(graph_state(complete_graph(m)).statevector(), (2,) * m)
    for pair in itertools.combinations(range(m), 2):
        assert theorem1_certify(st, pair, graph_pair_protocol(m, pair)).passed


def _fake(pair, m, subject="s", verdict=PASS):
    return Certificate("theorem1", subject, m, verdict, "exact stabilizer", pair, ((pair[0],), (pair[1],)), [], "h")


def test_theorem2_covering_logic():
    all_pairs = [_fake(p, 4) for p in itertools.combinations(range(4), 2)]
    assert theorem2_certify(all_pairs).passed
    partial = theorem2_certify([_fake((0, 1), 4), _fake((2, 3), 4)])
    assert partial.verdict == FAIL
    assert partial.covering["AB:CD"] is None
    with pytest.raises(InputError):
        theorem2_certify([_fake((0, 1), 3, "s"), _fake((0, 2), 3, "t")])
    skipped = theorem2_certify([_fake((0, 1), 3), _fake((0, 2), 3, verdict=FAIL), _fake((1, 2), 3)])
    assert skipped.verdict == PASS
    assert any("did not pass" in n for n in skipped.notes)


def test_covering_map_straddles_every_cut():
    cert = certify_graph(5)
    for label, pair in cert.covering.items():
        side = label.split(":")[0]
        assert (pair[0] in side) != (pair[1] in side)


def test_replay_reproduces_certificates():
    e = StabilizerEnsemble.pure(graph_state(complete_graph(4)), name="K4-graph")
    cert = certify_graph(4)
    assert replay(cert, e)
    assert replay(cert.children[0], e)
    tampered = certify_graph(4).children[0]
    tampered.leaves[0].ok = not tampered.leaves[0].ok
    assert not replay(tampered, e)


def test_smolin_protocol_targets_and_steps():
    steps, ti, tj = smolin_pair_protocol(0, 1)
    assert len(steps) == 6 and {s.party for s in steps} == {2, 3, 4}
    assert len(ti) == len(tj) == 1
    assert set(smolin_protocol_doc()["pairs"]) == {a + b for a, b in itertools.combinations("ABCDE", 2)}


def test_smolin_demo_and_negative_control():
    cert = certify_smolin()
    assert cert.verdict == PASS
    assert len(cert.children) == 10 and all(c.passed for c in cert.children)
    assert len(cert.covering) == 15 and covering_is_consistent(cert)
    control = smolin_single_copy_control()
    assert control.verdict == FAIL
    assert "mixture" in control.leaves[control.first_failure].detail


def test_smolin_without_chaining_fails():
    # Skipping one party's Bell measurement leaves the pair correlated with that party.
    e = smolin_five_copies()
    steps, ti, tj = smolin_pair_protocol(0, 1)
    assert not theorem1_certify(e, (0, 1), steps[:-2], (ti, tj)).passed


def test_chained_sweep_decreases_and_matches_closed_form():
    rows = chained_sweep([2, 3, 4, 5])
    values = [v for _, v in rows]
    assert values[0] == pytest.approx(2 - math.sqrt(2), abs=1e-6)
    assert all(a > b for a, b in zip(values, values[1:]))
    for n, v in rows:
        assert v <= chained_bound(n) + 1e-9
    with pytest.raises(InputError):
        chained_sweep([1])


def test_pair_certificate_bounds_cut_fraction_on_ghz():
    # Condition GHZ on the middle party's X outcome: each conditional pair behavior bounds the cut fraction.
    tsirelson_a, tsirelson_b = [0, math.pi / 2], [math.pi / 4, -math.pi / 4]
    meas = dense.MeasurementFamily((dense.planar_family([tsirelson_a]).effects[0],
                                    dense.pauli_family(["XZ"]).effects[0],
                                    dense.planar_family([tsirelson_b]).effects[0]))
    b = dense.born_table(dense.ghz(3), meas)
    assert theorem1_certify(ghz_state(3), (0, 2), _x_on(3, 1)).passed
    pair_fractions = [local_fraction(condition(b, [1], [0], [a]), "float").value for a in (0, 1)]
    for cut in (Bipartition.of([0], 3), Bipartition.of([2], 3)):
        cut_value = bipartition_local_fraction(b, cut, "float").value
        assert cut_value <= max(pair_fractions) + 1e-7
        assert cut_value <= chained_bound(2) + 1e-7
