import pytest
from hypothesis import given, settings, strategies as st

import oracles
from relagg.aggregation import (CoalitionRule, Dictatorship, FunctionRule, ModelClass,
                                Oligarchy, ProductDomain, QuotaRule, RuleError, VoterSet)
from relagg.coalitions import (CoalitionFamily, NotCoalitionDetermined, all_or_nothing_report,
                               build_U_family, compute_D_U, compute_E_U, is_filter,
                               is_ultrafilter, least_element, principal_element, profiles_U_a,
                               supporters, winning_coalitions)
from relagg.core import Domain, RelationError

BET = ModelClass.betweenness(Domain.of_size(4))
V2 = VoterSet.of_size(2)
DB2 = ProductDomain(BET, V2)


def _as_sets(W):
    return frozenset(frozenset(s) for s in W.sets())


def _structure_sweep(m):
    v = VoterSet.of_size(m)
    ids = list(v.ids)
    n_ultra = n_filter = 0
    for W in CoalitionFamily.all_families(v):
        F = _as_sets(W)
        ultra = is_ultrafilter(W).ok
        filt = is_filter(W).ok
        assert ultra == oracles.is_principal(F, ids)
        assert ultra == oracles.is_ultrafilter(F, ids)
        assert filt == oracles.is_filter(F, ids)
        assert filt == oracles.is_principal_filter(F, ids)
        if ultra:
            assert filt
            i = principal_element(W)
            assert i is not None and F == {U for U in oracles.all_subsets(ids) if i in U}
        else:
            assert principal_element(W) is None
        if filt:
            assert least_element(W) == sorted(frozenset.intersection(*F))
        n_ultra += ultra
        n_filter += filt
    return n_ultra, n_filter


@pytest.mark.parametrize("m", [1, 2, 3])
def test_ultrafilters_are_principal(m):
    n_ultra, n_filter = _structure_sweep(m)
    assert n_ultra == m
    assert n_filter == 2 ** m - 1


@pytest.mark.slow
def test_ultrafilters_are_principal_four_voters():
    assert _structure_sweep(4) == (4, 15)


def test_failure_witnesses():
    v = VoterSet.of_size(3)
    maj = CoalitionFamily.majority(v)
    rep = is_ultrafilter(maj)
    assert rep.failed == ["F4"]
    w, rest, sub = rep.F4.witness
    assert w in maj.sets() and rest not in maj.sets() and sub not in maj.sets()
    f = is_filter(maj)
    assert not f.ok and f.witness[0] == "intersection-closed"
    assert is_filter(CoalitionFamily(v, 0)).witness[0] == "contains-I"
    assert is_filter(CoalitionFamily.from_masks(v, range(8))).witness[0] == "proper"
    up = CoalitionFamily.from_sets(v, [["1"], ["1", "2", "3"]])
    assert is_filter(up).witness[0] == "upward-closed"


def test_family_json_and_labels():
    v = VoterSet.of_size(3)
    W = CoalitionFamily.principal(v, ["2"])
    assert CoalitionFamily.from_dict(W.to_dict()) == W
    assert len(W) == 4 and frozenset({"2", "3"}) in W
    with pytest.raises(RuleError):
        CoalitionFamily.from_dict({"voters": ["1"]})


def test_dictator_winning_coalitions_and_u_family():
    rule = Dictatorship("1")
    for t in [("a", "b", "c"), ("d", "a", "c")]:
        W = winning_coalitions(rule, DB2, t)
        assert W.sets() == [["1"], ["1", "2"]]
        assert W == winning_coalitions(rule, DB2, t, engine="enumerate")
    U = build_U_family(rule, DB2)
    assert U.sets() == [["1"], ["1", "2"]]
    assert U == build_U_family(rule, DB2, engine="enumerate")
    assert principal_element(U) == "1"
    assert all_or_nothing_report(rule, DB2)["holds"]


def test_profiles_U_a_count():
    # b sits between a and c in 4 of the 12 ballots, so voter 1 has 4
    # choices and voter 2 has 8: 32 profiles.
    ps = profiles_U_a(DB2, ["1"], ("a", "b", "c"))
    assert len(ps) == 32
    assert all(supporters(p, ("a", "b", "c")) == {"1"} for p in ps)
    brute = [p for p in DB2 if supporters(p, ("a", "b", "c")) == {"1"}]
    assert set(ps) == set(brute)


def test_supporters_rejects_bad_tuple():
    p = next(iter(DB2))
    with pytest.raises(RelationError):
        supporters(p, ("a", "b"))
    with pytest.raises(RelationError):
        supporters(p, ("a", "a", "b"))


def test_d_u_and_e_u():
    rule = Oligarchy(frozenset("12"))
    d1 = compute_D_U(rule, DB2, ["1"])
    assert not d1.witnessed and len(d1.vacuous) == 0
    d12 = compute_D_U(rule, DB2, ["1", "2"])
    assert len(d12.witnessed) == 24
    e1 = compute_E_U(rule, DB2, ["1"])
    assert e1.notes["within_D_U"]
    assert compute_D_U(rule, DB2, ["1"], engine="enumerate").relation == d1.relation


def test_not_coalition_determined():
    def flip(p):
        # voter 1's ballot, unless voter 2 holds (a,b,c): then voter 2's
        return p.relations[1] if ("a", "b", "c") in p.relations[1] else p.relations[0]
    rule = FunctionRule(flip, "flip")
    res = winning_coalitions(rule, DB2, ("a", "c", "b"))
    assert isinstance(res, NotCoalitionDetermined)
    assert supporters(res.first, res.tuple) == supporters(res.second, res.tuple)


def test_quota_is_neutral_not_filter():
    v3 = VoterSet.of_size(3)
    D = ProductDomain(BET, v3)
    W = winning_coalitions(QuotaRule(2), D, ("a", "b", "c"))
    assert W == CoalitionFamily.majority(v3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, (1 << 16) - 1))
def test_filter_implies_closure_facts(bits):
    v = VoterSet.of_size(4)
    W = CoalitionFamily(v, bits)
    if is_filter(W).ok:
        core = least_element(W)
        assert W == CoalitionFamily.principal(v, core)
    if is_ultrafilter(W).ok:
        assert is_filter(W).ok and principal_element(W) is not None


@pytest.mark.parametrize("rule", [Oligarchy(frozenset("12")), QuotaRule(1), QuotaRule(2)],
                         ids=lambda r: r.name)
def test_all_or_nothing_for_uniform_rules(rule):
    assert all_or_nothing_report(rule, DB2) == {"holds": True, "mixed": []}
