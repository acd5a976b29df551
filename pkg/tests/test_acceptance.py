"""The eight acceptance criteria, each at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL`` line; the lines are
printed together at the end of the pytest run (see conftest.py) and also
when this file is executed directly.
"""

import time
from itertools import combinations

import pytest

from conftest import SLOW
from oracles import delta_brute, is_principal
from relagg.aggregation import (CoalitionRule, ModelClass, ProductDomain, VoterSet, check_D)
from relagg.coalitions import (CoalitionFamily, build_U_family, is_filter, is_ultrafilter,
                               principal_element)
from relagg.core import Domain, delta_subsequences
from relagg.metaproperties import (disjunctive_placement_report, simplicial_contagious_witness,
                                   simplicial_implicative_witnesses, verify_implicative,
                                   verify_window)
from relagg.models import (CHECKERS, PropertySpec, all_betweenness, all_cyclic, count_models)
from relagg.tables import TABLE_IDS, ProofTable, default_instance, dumps, replay_table
from relagg.verifier import (verify_dictatorship_theorem, verify_oligarchy_theorem,
                             verify_theorem1)

RESULTS = {}

CYCLIC_K4_SIMPLICIAL = {5: True, 6: True}
FULL_CLASS_N4_K3 = 154798


def record(n, ok, detail, seconds, limit=None):
    within = limit is None or seconds < limit
    passed = bool(ok) and within
    budget = f" (limit {limit}s)" if limit else ""
    RESULTS[n] = f"CRITERION {n}: {'PASS' if passed else 'FAIL'} - {detail} [{seconds:.2f}s{budget}]"
    print(RESULTS[n])
    return passed


def test_criterion_1_family_properties():
    t0 = time.perf_counter()
    ok = True
    for n in (4, 5, 6):
        for R in all_betweenness(Domain.of_size(n)):
            ok &= all(CHECKERS[a](R).ok for a in ("connected", "exclusive", "simplicial-transitive"))
    simp = {}
    for n in (5, 6):
        cs = all_cyclic(Domain.of_size(n), 4)
        ok &= all(CHECKERS["connected"](R).ok and CHECKERS["exclusive"](R).ok for R in cs)
        verdicts = {CHECKERS["simplicial-transitive"](R).ok for R in cs}
        simp[n] = verdicts == {CYCLIC_K4_SIMPLICIAL[n]}
    ok &= all(simp.values())
    dt = time.perf_counter() - t0
    assert record(1, ok, "betweenness n=4..6 conn/excl/simpl; cyclic k=4 n=5,6 conn/excl, "
                  f"simplicial verdict {CYCLIC_K4_SIMPLICIAL}", dt, 10)


def test_criterion_2_delta_oracle():
    t0 = time.perf_counter()
    checked = 0
    ok = True
    for m in range(1, 7):
        s = tuple(range(10, 10 + m))
        pos = range(1, m + 1)
        for r in range(0, min(m, 3) + 1):
            for nreq in range(m - r + 1):
                for req in combinations(pos, nreq):
                    rest = [p for p in pos if p not in req]
                    for nf in range(min(r, len(rest)) + 1):
                        for forb in combinations(rest, nf):
                            got = delta_subsequences(s, r, req, forb)
                            ok &= sorted(got) == sorted(delta_brute(s, r, req, forb))
                            ok &= len(set(got)) == len(got)
                            checked += 1
    dt = time.perf_counter() - t0
    assert record(2, ok, f"{checked} (m, r, required, forbidden) cases equal brute force", dt)


def test_criterion_3_model_counts():
    t0 = time.perf_counter()
    small = count_models(Domain.of_size(3), 3, PropertySpec.parse("connected,exclusive"))
    t1 = time.perf_counter()
    full = count_models(Domain.of_size(4), 3, PropertySpec.parse("connected,exclusive,simplicial-transitive"))
    scan = time.perf_counter() - t1
    ok = small == 62 and full == FULL_CLASS_N4_K3
    assert record(3, ok and scan < 60, f"n=3 count {small} (want 62); n=4 2^24 scan {full} "
                  f"(frozen {FULL_CLASS_N4_K3}) in {scan:.2f}s", time.perf_counter() - t0)


def test_criterion_4_ultrafilters():
    t0 = time.perf_counter()
    sizes = (2, 3, 4) if SLOW else (2, 3)
    ok = True
    seen = 0
    for m in sizes:
        v = VoterSet.of_size(m)
        for W in CoalitionFamily.all_families(v):
            u = is_ultrafilter(W).ok
            F = frozenset(frozenset(s) for s in W.sets())
            ok &= u == is_principal(F, list(v.ids))
            ok &= (not u) or is_filter(W).ok
            seen += 1
    dt = time.perf_counter() - t0
    limit = None if SLOW else 30
    assert record(4, ok, f"|I| in {sizes}: {seen} families, ultrafilter <=> principal, "
                  "ultrafilter => filter", dt, limit)


def _theorem1_case(m):
    v = VoterSet.of_size(m)
    d = Domain.of_size(4)
    rep = verify_theorem1(d, 3, v, "betweenness")
    D = ProductDomain(ModelClass.betweenness(d), v)
    principal = [W for W in CoalitionFamily.all_families(v) if is_principal(
        frozenset(frozenset(s) for s in W.sets()), list(v.ids))]
    ident = True
    for W in principal:
        rule = CoalitionRule(W)
        i = principal_element(W)
        ident &= check_D(rule, D) == i
        ident &= principal_element(build_U_family(rule, D)) == i
    expected = [W.sets() for W in principal]
    ok = rep.verdict == "confirmed" and rep.passing == expected and ident and len(rep.candidates) == 2 ** 2 ** m
    return ok, len(rep.candidates), len(rep.passing)


def test_criterion_5_theorem1():
    t0 = time.perf_counter()
    ok2, c2, p2 = _theorem1_case(2)
    detail = f"|I|=2: {c2} rules, {p2} pass, all dictatorships by check_D and U-family"
    # the |I|=3 case is fast enough to run by default
    ok3, c3, p3 = _theorem1_case(3)
    detail += f"; |I|=3: {c3} rules, {p3} pass"
    assert record(5, ok2 and ok3, detail, time.perf_counter() - t0, 60)


def test_criterion_6_oligarchy_dictatorship():
    t0 = time.perf_counter()
    d = Domain.of_size(4)
    simp = PropertySpec.parse("simplicial-transitive")
    full = PropertySpec.parse("connected,exclusive,simplicial-transitive")
    ok = True
    parts = []
    for m in (2, 3):
        v = VoterSet.of_size(m)
        olig = verify_oligarchy_theorem(d, 3, v, simp)
        dic = verify_dictatorship_theorem(d, 3, v, full)
        ok &= olig.verdict == "confirmed" and len(olig.passing) == 2 ** m - 1
        ok &= dic.verdict == "confirmed" and len(dic.passing) == m
        ok &= all(c.get("agrees_with_reference") for r in (olig, dic) for c in r.candidates if c["pass"])
        parts.append(f"|I|={m}: {len(olig.passing)} principal filters, {len(dic.passing)} dictators")
    assert record(6, ok, "metaproperties verified first; " + "; ".join(parts), time.perf_counter() - t0)


def test_criterion_7_metaproperty_witnesses():
    t0 = time.perf_counter()
    d = Domain.of_size(5)
    simp = PropertySpec.parse("simplicial-transitive")
    a, b = default_instance(d, 3)
    contagious = {j: verify_window("contagious", *simplicial_contagious_witness(simp, a, b, j), d, 3).ok
                  for j in (1, 2, 3)}
    implicative = {}
    for j in (2, 3):
        rs = [verify_window("implicative", w, ts, d, 3) for w, ts in simplicial_implicative_witnesses(simp, a, b, j)]
        implicative[j] = [r.ok or r.witness.get("missing_exemplar") for r in rs]
    placement = disjunctive_placement_report(PropertySpec.parse("connected"), d, a, (1, 2, 3), (2, 1, 3))
    ok_c = all(contagious.values())
    ok_i = all(x is True for v in implicative.values() for x in v)
    ok_d = len(placement["valid_placements"]) == 1
    # not part of the criterion: does some other implicative window exist?
    searched = verify_implicative(simp, d, 3).ok
    detail = (f"contagious j=1..3 {'valid' if ok_c else contagious}; "
              f"implicative {'valid' if ok_i else f'INVALID, missing exemplar per order {implicative}'} "
              f"(a searched window {'exists' if searched else 'was not found'}); "
              f"connected disjunctive valid only with the other arrangements in {placement['valid_placements']}")
    assert record(7, ok_c and ok_i and ok_d, detail, time.perf_counter() - t0, 120)


def _replay_all():
    d = Domain.of_size(4)
    a, b = default_instance(d, 3)
    classes = {
        "betweenness": lambda spec: ModelClass.betweenness(d),
        "full": lambda spec: ModelClass.of_spec(d, 3, spec, materialize=True),
    }
    cache, reports = {}, []
    for fam, make in classes.items():
        for tid in TABLE_IDS:
            spec = PropertySpec.parse("connected,exclusive," + ("path-transitive" if "path" in tid
                                                                 else "simplicial-transitive"))
            key = (fam, spec)
            if key not in cache:
                cache[key] = make(spec)
            for j in ((1, 2, 3) if tid.startswith("prop1") else (2,)):
                reports.append(replay_table(ProofTable.build(tid, a, b, j), cache[key]))
    return reports


def test_criterion_8_proof_replays():
    t0 = time.perf_counter()
    first = _replay_all()
    second = _replay_all()
    same = [dumps(x) for x in first] == [dumps(x) for x in second]
    confirmed = all(r["confirmed"] for rep in first for r in rep["rows"])
    f3 = [r["status"] for rep in first if rep["table"]["id"] == "claim-F3"
          for r in rep["rows"] if r["row"] == "U^c&V^c"]
    ok = same and confirmed and f3 and all(s == "UNSAT" for s in f3)
    rows = sum(len(rep["rows"]) for rep in first)
    assert record(8, ok, f"{len(first)} replays, {rows} rows, all confirmed; F3 all-forbidden row "
                  f"{sorted(set(f3))} on every class; byte-identical reruns: {same}",
                  time.perf_counter() - t0)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
