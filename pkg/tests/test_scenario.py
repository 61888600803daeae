from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from nonloc.boxes import pr_box, svetlichny_box, tsirelson_box, uniform_box
from nonloc.errors import InputError, SignalingError, StructuralError, ZeroProbabilityError
from nonloc.fixtures import signaling_box
from nonloc.scenario import (Behavior, Bipartition, Scenario, behavior_from_json, behavior_to_json, bipartitions,
                             condition, marginal, mixture, permute_parties, product, relabel, validate)
from randgen import check_conditioning, random_bipartite_ns, random_tripartite_ns


def test_scenario_shape_and_size():
    s = Scenario((2, 3), (2, 4))
    assert s.shape == (2, 3, 2, 4)
    assert s.size == 48
    assert s.sub([1]).settings == (3,)


@pytest.mark.parametrize("settings, outcomes", [((), ()), ((2,), (2, 2)), ((0, 2), (2, 2)), ((2, 2), (1, 2))])
def test_scenario_rejects_malformed(settings, outcomes):
    with pytest.raises(InputError):
        Scenario(settings, outcomes)


def test_bipartition_count_and_canonical_form():
    for m in range(2, 6):
        cuts = bipartitions(m)
        assert len(cuts) == 2 ** (m - 1) - 1
        assert len({c.label for c in cuts}) == len(cuts)
        assert all(0 in c.block_a for c in cuts)
    assert Bipartition.of([1, 2], 3) == Bipartition.of([0], 3)
    assert Bipartition.of([0], 3).label == "A:BC"
    assert Bipartition.of([0], 3).straddles(0, 2)
    assert not Bipartition.of([0], 3).straddles(1, 2)


def test_behavior_mode_inference():
    assert pr_box().rational
    assert not tsirelson_box().rational
    assert Behavior(Scenario.uniform(1), [1, 0, 0, 1]).rational


def test_behavior_table_is_immutable():
    b = pr_box()
    with pytest.raises(ValueError):
        b.table[0, 0, 0, 0] = Fraction(1)


def test_validate_accepts_standard_boxes():
    for b in (pr_box(), tsirelson_box(), svetlichny_box(), uniform_box(Scenario.uniform(4))):
        assert validate(b).ok


def test_validate_reports_each_violation_kind():
    s = Scenario.uniform(1)
    assert validate(Behavior(s, [Fraction(3, 2), Fraction(-1, 2), 1, 0])).of_kind("nonnegativity")
    assert validate(Behavior(s, [Fraction(1, 2), Fraction(1, 4), 1, 0])).of_kind("normalization")
    rep = validate(signaling_box())
    sig = rep.of_kind("no-signaling")
    assert sig and sig[0].party == 0 and sig[0].settings == (0, 1)
    assert rep.to_json()["ok"] is False


def test_float_tolerance_absorbs_rounding():
    t = np.array(tsirelson_box().table, dtype=float) + 1e-12
    assert validate(Behavior(Scenario.uniform(2), t, "float")).ok


def test_marginal_of_pr_box_is_uniform():
    m = marginal(pr_box(), [1])
    assert list(m.flat()) == [Fraction(1, 2)] * 4


def test_marginal_refuses_signaling_input():
    with pytest.raises(SignalingError) as exc:
        marginal(signaling_box(), [1])
    assert exc.value.party == 0


def test_condition_pr_box_gives_deterministic_partner():
    c = condition(pr_box(), [0], [1], [0])
    # a = 0 with x = 1: b = y
    assert c.p([0], [0]) == 1 and c.p([1], [1]) == 1


def test_condition_zero_probability_raises():
    b = Behavior.from_function(Scenario.uniform(2), lambda x, a: Fraction(int(a == (0, 0))))
    with pytest.raises(ZeroProbabilityError):
        condition(b, [0], [0], [1])


def test_conditioning_identities_random_bipartite():
    rng = random.Random(11)
    for _ in range(40):
        check_conditioning(random_bipartite_ns(rng), rng)


def test_conditioning_identities_random_tripartite():
    rng = random.Random(12)
    for _ in range(40):
        check_conditioning(random_tripartite_ns(rng), rng)


def test_product_is_no_signaling_and_factorizes():
    cut = Bipartition.of([1], 3)
    assert cut.block_a == (0, 2)
    solo = Behavior(Scenario.uniform(1), [1, 0, 0, 1])
    b = product(pr_box(), solo, cut)
    assert validate(b).ok
    assert b.p((0, 1, 1), (0, 1, 0)) == Fraction(1, 2)  # B outputs x_B; A and C share the PR box
    assert marginal(b, [1]) == solo


def test_mixture_and_permutation():
    b = mixture([Fraction(1, 2), Fraction(1, 2)], [pr_box(), uniform_box(Scenario.uniform(2))])
    assert validate(b).ok
    assert permute_parties(pr_box(), [1, 0]) == pr_box()
    with pytest.raises(InputError):
        mixture([1], [])


def test_relabel_round_trip():
    b = svetlichny_box()
    r = relabel(relabel(b, 1, [1, 0], [1, 0]), 1, [1, 0], [1, 0])
    assert r == b
    assert relabel(b, 2, None, [1, 0]) != b


def test_json_round_trip_rational_and_float():
    for b in (pr_box(), tsirelson_box()):
        again = behavior_from_json(behavior_to_json(b))
        assert again.mode == b.mode
        assert again.allclose(b, 0)


def test_json_structural_errors_name_the_entry():
    doc = behavior_to_json(pr_box())
    del doc["table"][3]
    with pytest.raises(StructuralError, match="missing 1 entries"):
        behavior_from_json(doc)
    doc = behavior_to_json(pr_box())
    doc["table"][3] = dict(doc["table"][2])
    with pytest.raises(StructuralError, match=r"table\[3\] duplicates"):
        behavior_from_json(doc)
    with pytest.raises(StructuralError):
        behavior_from_json({"table": []})
