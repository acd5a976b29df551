import pytest

import oracles
from relagg.aggregation import ModelClass
from relagg.core import Domain
from relagg.models import PropertySpec
from relagg.tables import (TABLE_IDS, ProofTable, TableError, column_tuples, default_instance,
                           dumps, replay_table)

D4 = Domain.of_size(4)
BET = ModelClass.betweenness(D4)
A, B = default_instance(D4, 3)


def test_column_expressions():
    assert column_tuples("a", "abc", "d") == [("a", "b", "c")]
    assert len(column_tuples("perm(a)", "abc", "d")) == 5
    assert column_tuples("(b,a2,a3)", "abc", "d") == [("d", "b", "c")]
    assert column_tuples("delta(a1,a2,b,a3)[+2,+3]", "abc", "d") == [("a", "b", "d"), ("b", "d", "c")]
    assert column_tuples("delta(a1,a2,b,a3)[-1]", "abc", "d") == [("b", "d", "c")]
    for bad in ("(a1,a2)", "delta(a1,a2,a3)", "perm(b)", "(a1,x,a3)", "delta(a1,a2,b,a3)[2]"):
        with pytest.raises(TableError):
            column_tuples(bad, "abc", "d")


def test_build_guards():
    with pytest.raises(TableError):
        ProofTable.build("prop9", A, B)
    with pytest.raises(TableError):
        ProofTable.build("prop1-simplicial", A, "a")
    with pytest.raises(TableError):
        ProofTable.build("prop1-simplicial", A, B, j=4)


def test_overlaps_go_to_leftmost_column():
    t = ProofTable.build("claim-F4-simplicial", A, B)
    assert sorted(t.overlaps) == ["delta(a,b)", "delta(b,a)"]
    assert len(t.overlaps["delta(b,a)"]) == 3
    assert t.overlaps["delta(a,b)"] == [["a", "b", "c"]]
    seen = [x for _, _, ts in t.columns for x in ts]
    assert len(seen) == len(set(seen))


def test_mimic_rows_expand():
    t = ProofTable.build("prop3-simplicial", A, B)
    names = [n for n, _ in t.expanded_rows()]
    assert names == ["U", "U^c [base holds]", "U^c [base lacks]"]


def test_prop1_simplicial_betweenness():
    rep = replay_table(ProofTable.build("prop1-simplicial", A, B, j=2), BET)
    rows = {r["row"]: r for r in rep["rows"]}
    assert rows["U"]["status"] == "SAT" and rows["U^c"]["status"] == "UNSAT"
    # the order a < b < d < c realises row U
    assert {("a", "b", "c"), ("a", "d", "c"), ("a", "b", "d"), ("b", "d", "c")} <= \
        {tuple(x) for x in rows["U"]["exemplar"]}


def _brute_status(table, models):
    out = {}
    for name, marks in table.expanded_rows():
        need, avoid = set(), set()
        for (_, _, ts), mark in zip(table.columns, marks):
            if mark == "+":
                need |= set(ts)
            elif mark == "-":
                avoid |= set(ts)
        hit = any(need <= R and not (avoid & R) for R in models)
        out[name] = "SAT" if hit else "UNSAT"
    return out


CASES = [(tid, j) for tid in TABLE_IDS for j in ((1, 2, 3) if tid.startswith("prop1") else (2,))]


@pytest.mark.parametrize("tid,j", CASES)
def test_replay_matches_set_oracle(tid, j):
    table = ProofTable.build(tid, A, B, j)
    rep = replay_table(table, BET)
    assert all(r["confirmed"] for r in rep["rows"])
    expected = _brute_status(table, oracles.all_betweenness("abcd"))
    assert {r["row"]: r["status"] for r in rep["rows"]} == expected


def test_f3_all_forbidden_row_unsat_for_connected_classes():
    table = ProofTable.build("claim-F3", A, B)
    classes = [BET, ModelClass.cyclic(D4, 3),
               ModelClass.of_spec(D4, 3, PropertySpec.parse("connected,exclusive,path-transitive")),
               ModelClass.of_spec(D4, 3, PropertySpec.parse("connected,exclusive,simplicial-transitive"),
                                  materialize=True)]
    for mc in classes:
        rows = {r["row"]: r for r in replay_table(table, mc)["rows"]}
        assert rows["U^c&V^c"]["status"] == "UNSAT", mc.name
        assert rows["U^c&V^c"]["confirmed"]


def test_sat_cross_check_on_clausal_class():
    full = ModelClass.of_spec(D4, 3, PropertySpec.parse("connected,exclusive,path-transitive"),
                              materialize=True)
    rep = replay_table(ProofTable.build("claim-F4-path", A, B), full)
    for r in rep["rows"]:
        assert r["sat_oracle"] == r["status"] and r["confirmed"]


def test_reports_are_deterministic():
    t = ProofTable.build("prop3-path", A, B)
    one = dumps(replay_table(t, BET))
    two = dumps(replay_table(ProofTable.build("prop3-path", A, B), ModelClass.betweenness(D4)))
    assert one == two
