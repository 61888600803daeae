from __future__ import annotations

import json
from fractions import Fraction

import pytest

from nonloc.boxes import pr_box
from nonloc.errors import CapExceeded, InputError
from nonloc.polytopes import (DeterministicStrategy, VertexSet, hybrid_vertices, is_extremal,
                              local_deterministic_vertices, ns_equalities, ns_polytope_vertices)
from nonloc.scenario import Bipartition, Scenario, mixture, validate


def test_chsh_no_signaling_polytope():
    s = Scenario.uniform(2)
    ns = ns_polytope_vertices(s)
    local = local_deterministic_vertices(s)
    assert len(ns) == 24
    assert len(local) == 16
    assert local.keys() <= ns.keys()
    assert tuple(pr_box().flat()) in ns.keys()
    assert all(is_extremal(v) and validate(v).ok for v in ns)


@pytest.mark.parametrize("settings, outcomes, count", [((3,), (2,), 8), ((2,), (3,), 9), ((1, 1), (2, 2), 4)])
def test_small_polytopes_are_products_of_simplices(settings, outcomes, count):
    assert len(ns_polytope_vertices(Scenario(settings, outcomes))) == count


def test_uneven_bipartite_scenarios():
    assert len(ns_polytope_vertices(Scenario((3, 2), (2, 2)))) == 128
    assert len(ns_polytope_vertices(Scenario((2, 2), (3, 2)))) == 108


def test_extremality_rejects_mixtures():
    v = ns_polytope_vertices(Scenario.uniform(2)).vertices
    assert not is_extremal(mixture([Fraction(1, 2), Fraction(1, 2)], [v[0], v[1]]))


def test_equalities_annihilate_differences_of_behaviors():
    s = Scenario.uniform(2)
    rows = ns_equalities(s)
    a, b = pr_box().flat(), local_deterministic_vertices(s).vertices[5].flat()
    for row in rows:
        assert sum(r * (p - q) for r, p, q in zip(row, a, b)) == 0


def test_hybrid_vertices_across_one_cut():
    s = Scenario.uniform(3)
    hv = hybrid_vertices(s, Bipartition.of([0], 3))
    assert len(hv) == 4 * 24
    assert local_deterministic_vertices(s).keys() <= hv.keys()
    with pytest.raises(InputError):
        hybrid_vertices(Scenario.uniform(2), Bipartition.of([0], 3))


def test_caps_refuse_rather_than_approximate():
    with pytest.raises(CapExceeded):
        local_deterministic_vertices(Scenario.uniform(3, 4, 4), cap=1000)
    with pytest.raises(CapExceeded, match="table dimension 64"):
        ns_polytope_vertices(Scenario.uniform(3))


def test_deterministic_strategy_checks_shape():
    with pytest.raises(InputError):
        DeterministicStrategy(((0, 1),)).behavior(Scenario.uniform(2))


def test_vertex_set_json_and_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("NONLOC_CACHE_DIR", str(tmp_path))
    s = Scenario((2, 1), (2, 3))
    first = ns_polytope_vertices(s)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    doc = json.loads(files[0].read_text())
    assert doc["provenance"]["count"] == len(first)
    again = ns_polytope_vertices(s)
    assert again.keys() == first.keys()
    assert VertexSet.from_json(first.to_json()).keys() == first.keys()
