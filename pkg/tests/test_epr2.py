from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from nonloc.boxes import (deterministic_box, mermin_box, pr_box, pr_with_spectator, svetlichny_box, tsirelson_box,
                          uniform_box)
from nonloc.epr2 import (DualCertificate, bipartition_local_fraction, check_dual_certificate, cut_scan, decompose,
                         local_fraction, svetlichny_decomposition)
from nonloc.errors import CapExceeded, InputError
from nonloc.fixtures import signaling_box
from nonloc.polytopes import is_extremal, local_deterministic_vertices
from nonloc.scenario import Bipartition, Scenario, mixture, product, validate
from randgen import random_relabel, random_tripartite_ns


def test_deterministic_box_is_fully_local():
    s = Scenario.uniform(2)
    r = local_fraction(deterministic_box(s, [(0, 1), (1, 1)]))
    assert r.value == 1 and r.p_ns == 0 and r.residual is None


def test_pr_box_has_no_local_part():
    r = local_fraction(pr_box())
    assert r.value == 0 and isinstance(r.value, Fraction)
    assert check_dual_certificate(r)
    assert r.residual == pr_box()


def test_pr_box_brute_force_oracle():
    # Every deterministic vertex puts weight on a cell where the PR box is zero, so no mixture fits under it.
    pr = pr_box().flat()
    for v in local_deterministic_vertices(Scenario.uniform(2)):
        assert any(d == 1 and p == 0 for d, p in zip(v.flat(), pr))


def test_tsirelson_box_matches_chsh_bound():
    r = local_fraction(tsirelson_box(), "float")
    expected = 2 - math.sqrt(2)
    assert r.value == pytest.approx(expected, abs=1e-6)
    # CHSH: local part scores at most 2, the remainder at most 4; the box scores 2 sqrt 2
    assert 2 * r.value + 4 * (1 - r.value) >= 2 * math.sqrt(2) - 1e-9
    assert check_dual_certificate(r)
    assert r.reconstruct().allclose(tsirelson_box(), 1e-9)
    assert validate(r.residual).ok


def test_mermin_box_has_no_local_part_exactly():
    r = local_fraction(mermin_box())
    assert r.value == 0 and r.mode == "rational"
    assert check_dual_certificate(r)


def test_reconstruction_and_residual_are_exact():
    # PR box at visibility 3/4: CHSH 3, local fraction 2 - 2 * 3/4
    b = mixture([Fraction(3, 4), Fraction(1, 4)], [pr_box(), uniform_box(Scenario.uniform(2))])
    r = local_fraction(b)
    assert r.value == Fraction(1, 2)
    assert r.reconstruct() == b
    assert validate(r.residual).ok
    assert sum(r.family_weights.values()) + r.p_ns == 1


def test_tampered_certificate_is_rejected():
    b = pr_box()
    r = local_fraction(b)
    coeffs = list(r.dual.coefficients)
    k = next(i for i, p in enumerate(b.flat()) if p > 0)
    coeffs[k] += 1
    r.dual = DualCertificate(coeffs, r.dual.model_bound, r.dual.ns_bound, r.dual.value)
    assert not check_dual_certificate(r)
    r2 = local_fraction(b)
    coeffs = list(r2.dual.coefficients)
    k = next(i for i, c in enumerate(coeffs) if c > 0)
    coeffs[k] = -coeffs[k]
    r2.dual = DualCertificate(coeffs, r2.dual.model_bound, r2.dual.ns_bound, r2.dual.value)
    assert not check_dual_certificate(r2)


def test_bipartition_fraction_of_pr_with_spectator():
    b = pr_with_spectator(0)
    assert bipartition_local_fraction(b, Bipartition.of([0], 3)).value == 1
    straddling = bipartition_local_fraction(b, Bipartition.of([1], 3))
    assert straddling.value < 1
    assert check_dual_certificate(straddling)


def test_product_across_cut_is_hybrid_local():
    cut = Bipartition.of([0, 2], 4)
    b = product(pr_box(), pr_box(), cut)
    assert bipartition_local_fraction(b, cut).value == 1


def test_svetlichny_box_is_genuinely_tripartite():
    b = svetlichny_box()
    assert is_extremal(b)
    scan = cut_scan(b)
    assert all(r.value == 0 for r in scan.values())
    r = svetlichny_decomposition(b)
    assert r.p_ns == 1
    assert check_dual_certificate(r)


def test_pr_with_spectator_is_absorbed_by_hybrid_term():
    r = svetlichny_decomposition(pr_with_spectator(0))
    assert r.p_ns == 0
    assert r.family_weights["A:BC"] == 1
    assert r.reconstruct() == pr_with_spectator(0)


def test_mermin_box_golden_values():
    r = svetlichny_decomposition(mermin_box())
    scan = cut_scan(mermin_box())
    assert r.p_ns == 0
    assert {k: v.value for k, v in scan.items()} == {"A:BC": 1, "AB:C": 1, "AC:B": 1}
    assert 1 - r.p_ns <= sum(v.value for v in scan.values())


def test_local_box_svetlichny_goes_to_local_family():
    s = Scenario.uniform(3)
    r = svetlichny_decomposition(deterministic_box(s, [(0, 1), (1, 1), (0, 0)]))
    assert r.p_ns == 0 and r.p_l == 1


def test_monotonicity_and_cut_consistency_random():
    rng = random.Random(21)
    for _ in range(10):
        b = random_tripartite_ns(rng)
        pl = local_fraction(b).value
        scan = cut_scan(b)
        assert all(pl <= r.value for r in scan.values())
        assert 1 - svetlichny_decomposition(b).p_ns <= sum(r.value for r in scan.values())


def test_relabeling_leaves_values_unchanged():
    rng = random.Random(22)
    for _ in range(5):
        b = random_tripartite_ns(rng)
        rb = random_relabel(rng, b)
        assert local_fraction(rb).value == local_fraction(b).value
        assert svetlichny_decomposition(rb).p_ns == svetlichny_decomposition(b).p_ns


def test_zero_case_on_relabeled_svetlichny_boxes():
    rng = random.Random(23)
    for _ in range(3):
        b = random_relabel(rng, svetlichny_box())
        assert all(r.value == 0 for r in cut_scan(b).values())
        assert svetlichny_decomposition(b).p_ns == 1


def test_input_errors():
    with pytest.raises(InputError):
        local_fraction(signaling_box())
    with pytest.raises(InputError):
        svetlichny_decomposition(pr_box())
    with pytest.raises(InputError):
        local_fraction(tsirelson_box(), "rational")
    with pytest.raises(InputError):
        decompose(pr_box(), [local_deterministic_vertices(Scenario.uniform(3))], "local")
    with pytest.raises(CapExceeded):
        local_fraction(pr_box(), cap=8)


def test_result_json_layout():
    doc = svetlichny_decomposition(svetlichny_box()).to_json()
    assert doc["values"]["p_NS"] == "1"
    assert set(doc["values"]["per_cut"]) == {"A:BC", "AB:C", "AC:B"}
    assert doc["dual"]["model_bound"] == "1" and doc["dual"]["ns_bound"] == "0"
    assert doc["status"] == "optimal" and doc["mode"] == "rational"


def test_float_mode_on_rational_input():
    b = mixture([Fraction(3, 4), Fraction(1, 4)], [pr_box(), uniform_box(Scenario.uniform(2))])
    r = local_fraction(b, "float")
    assert r.mode == "float" and r.value == pytest.approx(0.5, abs=1e-9)
