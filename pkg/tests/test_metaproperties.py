import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relagg.aggregation import ModelClass
from relagg.core import Domain, KRelation, RelationError, injective_tuples
from relagg.metaproperties import (COUNTER, PATTERNS, PreconditionError, PropertyWindow,
                                   SearchBounds, connected_disjunctive_placements,
                                   contagious_pairs, disjunctive_placement_report, search_window,
                                   simplicial_contagious_witness,
                                   simplicial_implicative_witnesses, verify_contagious,
                                   verify_disjunctive, verify_implicative, verify_window,
                                   window_masks)
from relagg.models import PropertySpec

D4, D5 = Domain.of_size(4), Domain.of_size(5)
SIMP = PropertySpec.parse("simplicial-transitive")
PATH = PropertySpec.parse("path-transitive")
FULL = PropertySpec.parse("connected,exclusive,simplicial-transitive")
HORN = "every clause is Horn, so models are closed under intersection"

# Search results at n=5, k=3, frozen as regression constants.
PATH_IMPLICATIVE = {"tuples": [["a", "b", "d"], ["a", "c", "b"], ["a", "c", "d"]],
                    "s_plus": [], "s_minus": []}
SIMP_IMPLICATIVE = {"tuples": [["a", "b", "c"], ["a", "b", "d"], ["b", "c", "d"]],
                    "s_plus": [["a", "d", "b"], ["b", "d", "c"], ["c", "d", "b"], ["d", "c", "b"]],
                    "s_minus": []}
FULL_DISJUNCTIVE = {"tuples": [["a", "b", "c"], ["a", "c", "b"]], "s_plus": [],
                    "s_minus": [["b", "a", "c"], ["b", "c", "a"], ["c", "a", "b"], ["c", "b", "a"]]}


def _frozen_view(check):
    w = check.witness.to_dict()
    return {"tuples": w["tuples"], "s_plus": w["window"]["s_plus"], "s_minus": w["window"]["s_minus"]}


def test_pattern_tables_are_consistent():
    for kind, pats in PATTERNS.items():
        req, forb = COUNTER[kind]
        for name, (r, f) in pats.items():
            assert not r & f
            # no exemplar realises the forbidden pattern
            assert not (req <= r and forb <= f), (kind, name)


def test_contagious_pair_counts():
    assert len(contagious_pairs(D5, 3, 2)) == 360
    pairs = contagious_pairs(D4, 3, 1, j=2)
    a, c = pairs[0]
    assert a == ("a", "b", "c") and "d" in c


@pytest.mark.parametrize("spec", [SIMP, PATH, FULL], ids=["simplicial", "path", "full"])
def test_contagious_condition_two(spec):
    r = verify_contagious(spec, D5, 3)
    assert r.ok and r.condition == 2 and len(r.witnesses) == 360
    for w in r.witnesses[:5]:
        assert w.check().ok


def test_path_results_frozen():
    imp = verify_implicative(PATH, D5, 3)
    assert imp.ok and _frozen_view(imp) == PATH_IMPLICATIVE
    dis = verify_disjunctive(PATH, D5, 3)
    assert not dis.ok and dis.witness == HORN


def test_simplicial_results_frozen():
    imp = verify_implicative(SIMP, D5, 3)
    assert imp.ok and _frozen_view(imp) == SIMP_IMPLICATIVE
    assert imp.witness.check().ok
    assert verify_disjunctive(SIMP, D5, 3).witness == HORN


def test_full_theory_disjunctive_frozen():
    dis = verify_disjunctive(FULL, D5, 3)
    assert dis.ok and _frozen_view(dis) == FULL_DISJUNCTIVE
    assert verify_implicative(FULL, D5, 3).ok


@pytest.mark.parametrize("name", ["trivial", "exclusive"])
def test_negative_properties_are_not_contagious(name):
    r = verify_contagious(PropertySpec.parse(name), D5, 3)
    assert not r.ok and "never occurs as a forced conclusion" in r.failures["condition 2"]["reason"]
    assert not verify_implicative(PropertySpec.parse(name), D5, 3).ok


def test_search_results_survive_exhaustive_recheck_at_n4():
    found = [verify_implicative(SIMP, D4, 3), verify_implicative(PATH, D4, 3),
             verify_disjunctive(FULL, D4, 3)]
    r = verify_contagious(SIMP, D4, 3)
    found += [type(found[0])(True, w) for w in r.witnesses[::24]]
    for c in found:
        assert c.ok
        assert c.witness.check(exhaustive=True).ok


@pytest.mark.parametrize("j", [1, 2, 3])
def test_hand_contagious_windows(j):
    w, tuples = simplicial_contagious_witness(SIMP, "abc", "d", j)
    assert verify_window("contagious", w, tuples, D5, 3).ok


@pytest.mark.parametrize("j", [2, 3])
def test_hand_implicative_windows_fail(j):
    for w, tuples in simplicial_implicative_witnesses(SIMP, "abc", "d", j):
        r = verify_window("implicative", w, tuples, D5, 3)
        assert not r.ok
        assert r.witness == {"condition": 2, "missing_exemplar": "R13"}
    with pytest.raises(PreconditionError):
        simplicial_implicative_witnesses(SIMP, "abc", "d", 1)


def test_hand_implicative_r13_impossible_exhaustively():
    # j = 2 at n = 4: S+ = {(a,b,d)}, and R13 would add (a,b,c) and (a,d,c).
    # Those are the three subsequences of (a,b,d,c) through position 1, so
    # simplicial transitivity forces the fourth, (b,d,c), which R13 lacks.
    (w, (t1, t2, t3)), _ = simplicial_implicative_witnesses(SIMP, "abc", "d", 2)
    masks = window_masks(w, D4, 3)
    assert masks.size > 0
    ids = [injective_tuples(D4, 3).index(t) for t in (t1, t2, t3)]
    bit = [((masks >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in ids]
    assert int(np.sum(bit[0] & ~bit[1] & bit[2])) == 0


def test_connected_disjunctive_placement():
    rep = disjunctive_placement_report(PropertySpec.parse("connected"), D5, "abc",
                                       (1, 2, 3), (2, 1, 3))
    assert rep["valid_placements"] == ["S-"]
    assert rep["S+"]["detail"]["condition"] == 1
    with pytest.raises(PreconditionError):
        connected_disjunctive_placements(SIMP, "abc", (1, 2, 3), (1, 2, 3))


def test_window_validation():
    with pytest.raises(RelationError):
        PropertyWindow(SIMP, frozenset({("a", "b", "c")}), frozenset({("a", "b", "c")}))
    with pytest.raises(RelationError):
        PropertyWindow(SIMP, frozenset({("a", "a", "c")}))
    w = PropertyWindow(SIMP, frozenset({("a", "b", "z")}))
    with pytest.raises(RelationError):
        w.masks(D4, 3)


def test_bounds_and_domain_guard():
    with pytest.raises(PreconditionError):
        verify_contagious(SIMP, Domain.of_size(3), 3)
    # the frozen simplicial witness needs |S+| = 4
    tuples = [tuple(t) for t in SIMP_IMPLICATIVE["tuples"]]
    assert search_window("implicative", SIMP, D5, 3, tuples, SearchBounds(4, 0)).ok
    assert not search_window("implicative", SIMP, D5, 3, tuples, SearchBounds(3, 0)).ok


K2 = Domain.of_size(4)
T2 = injective_tuples(K2, 2)
subsets = st.sets(st.sampled_from(T2), max_size=4)


@settings(max_examples=40, deadline=None)
@given(subsets, subsets, subsets, subsets)
def test_windows_are_antitone(p1, m1, p2, m2):
    plus_small, minus_small = p1 - m1, m1 - p1
    plus_big = plus_small | (p2 - minus_small - m2)
    minus_big = minus_small | (m2 - plus_big)
    small = PropertyWindow(PATH, plus_small, minus_small)
    big = PropertyWindow(PATH, plus_big, minus_big)
    outer = set(window_masks(small, K2, 2).tolist())
    inner = set(window_masks(big, K2, 2).tolist())
    assert inner <= outer


SIMP_CLASS = ModelClass.of_spec(D4, 3, SIMP, materialize=True)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, len(SIMP_CLASS) - 1), st.integers(0, len(SIMP_CLASS) - 1))
def test_simplicial_models_closed_under_intersection(i, j):
    masks = SIMP_CLASS.masks()
    R = KRelation(D4, 3, bits=int(masks[i]) & int(masks[j]))
    assert SIMP.holds(R)
