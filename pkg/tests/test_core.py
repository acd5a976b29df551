from itertools import combinations, permutations

import pytest
from hypothesis import given, settings, strategies as st

from oracles import delta_brute
from relagg.core import (Domain, KRelation, RelationError, apply_permutation, injective_tuples,
                         insert_at, invert_permutation, mask_of, restrict, substitute_at,
                         tuple_count, delta_subsequences)


def test_domain_labels_and_errors():
    d = Domain.of_size(4)
    assert d.elements == ("a", "b", "c", "d")
    assert d.index("c") == 2
    with pytest.raises(RelationError):
        Domain(["a", "a"])
    with pytest.raises(RelationError):
        Domain([])


def test_injective_tuples_canonical_order():
    d = Domain.of_size(4)
    assert list(injective_tuples(d, 3)) == list(permutations("abcd", 3))
    assert tuple_count(4, 3) == 24
    assert tuple_count(6, 4) == 360


@pytest.mark.parametrize("m", range(1, 7))
def test_delta_matches_brute_force_exhaustively(m):
    s = tuple("pqrstu"[:m])
    positions = range(1, m + 1)
    for r in range(0, min(m, 3) + 1):
        for nreq in range(m + 1):
            for req in combinations(positions, nreq):
                rest = [p for p in positions if p not in req]
                for nforb in range(min(r, len(rest)) + 1):
                    for forb in combinations(rest, nforb):
                        if r > m - len(req):
                            with pytest.raises(RelationError):
                                delta_subsequences(s, r, req, forb)
                            continue
                        got = delta_subsequences(s, r, req, forb)
                        assert sorted(got) == sorted(delta_brute(s, r, req, forb))
                        assert len(set(got)) == len(got)


def test_delta_rejects_bad_positions():
    with pytest.raises(RelationError):
        delta_subsequences("abc", 1, required={0})
    with pytest.raises(RelationError):
        delta_subsequences("abc", 1, required={1}, forbidden={1})
    with pytest.raises(RelationError):
        delta_subsequences("abc", 1, forbidden={1, 2})


def test_substitute_and_insert():
    assert substitute_at(("a", "b", "c"), 2, "d") == ("a", "d", "c")
    assert insert_at(("a", "b", "c"), 2, "d") == ("a", "d", "b", "c")
    assert insert_at(("a", "b", "c"), 4, "d") == ("a", "b", "c", "d")
    with pytest.raises(RelationError):
        substitute_at(("a", "b", "c"), 4, "d")


@given(st.permutations([1, 2, 3, 4]))
def test_permutation_inverse(tau):
    t = ("w", "x", "y", "z")
    assert apply_permutation(apply_permutation(t, tau), invert_permutation(tau)) == t


def test_krelation_rejects_bad_tuples():
    d = Domain.of_size(3)
    with pytest.raises(RelationError):
        KRelation(d, 2, [("a", "a")])
    with pytest.raises(RelationError):
        KRelation(d, 2, [("a", "z")])
    with pytest.raises(RelationError):
        KRelation(d, 2, [("a", "b", "c")])
    with pytest.raises(RelationError):
        KRelation.from_dict({"domain": ["a", "b"], "k": 2, "tuples": [["a", "b"], ["a", "b"]]})


relations = st.integers(0, (1 << 24) - 1).map(lambda b: KRelation(Domain.of_size(4), 3, bits=b))


@settings(max_examples=60)
@given(relations, relations)
def test_set_algebra_matches_python_sets(R, S):
    r, s = set(R), set(S)
    assert set(R & S) == r & s
    assert set(R | S) == r | s
    assert set(R - S) == r - s
    assert (R <= S) == (r <= s)
    assert len(R) == len(r)


@settings(max_examples=60)
@given(relations)
def test_json_round_trip(R):
    assert KRelation.from_json(R.to_json()) == R
    assert mask_of(R.domain, R.k, R) == R.bits


def test_restrict_keeps_inner_tuples():
    d = Domain.of_size(4)
    R = KRelation(d, 2, [("a", "b"), ("b", "d"), ("c", "a")])
    sub = restrict(R, ["a", "b", "c"])
    assert set(sub) == {("a", "b"), ("c", "a")}
    assert sub.domain.n == 3
