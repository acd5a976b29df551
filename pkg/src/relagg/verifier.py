"""Exhaustive desk-scale checks of the impossibility theorems.

Every verifier enumerates the uniform coalition rules over a voter set
(one per family of coalitions, 2^(2^m) of them), runs the axiom checkers
on each and compares the passing families with the families predicted by
the theorem.  Reports are plain dicts serialised with sorted keys; wall
clock time sits in a separate ``timing`` field so the rest of the report
is byte-reproducible.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .aggregation import (UD_NOTE, AggregationRule, CoalitionRule, Dictatorship, ModelClass,
                          Oligarchy, ProductDomain, QuotaRule, VoterSet, check_closure,
                          check_collective_rationality, check_D, check_groundedness, check_IIA,
                          check_neutral, check_P, check_UD, rules_agree)
from .coalitions import (CoalitionFamily, NotCoalitionDetermined, build_U_family, is_filter,
                         is_ultrafilter, least_element, principal_element)
from .core import BudgetExceeded, Domain, KRelation, RelationError, substitute_at
from .metaproperties import (PreconditionError, SearchBounds, verify_contagious,
                             verify_disjunctive, verify_implicative)
from .models import DEFAULT_BUDGET, TRIVIAL, PropertySpec

EXIT_CONFIRMED, EXIT_COUNTEREXAMPLE, EXIT_PRECONDITION = 0, 1, 2


@dataclass
class VerificationReport:
    theorem: str
    params: dict
    candidates: list = field(default_factory=list)
    passing: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    verdict: str = "pending"
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_COUNTEREXAMPLE if self.verdict == "counterexample" else EXIT_CONFIRMED

    def body(self) -> dict:
        return {"theorem": self.theorem, "params": self.params, "verdict": self.verdict,
                "passing": self.passing, "expected": self.expected, "checks": self.checks,
                "notes": self.notes, "candidates": self.candidates}

    def to_dict(self, timing: bool = True) -> dict:
        out = self.body()
        if timing:
            out["timing"] = self.timing
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2, default=_jsonable)


def _jsonable(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _witness(w):
    """Make checker witnesses JSON friendly."""
    if w is None or isinstance(w, (bool, int, str)):
        return w
    if hasattr(w, "to_dict"):
        return w.to_dict()
    if isinstance(w, (tuple, list)):
        return [_witness(x) for x in w]
    return repr(w)


def model_class_for(name: str, domain: Domain, k: int, spec: PropertySpec | None = None,
                    budget: int = DEFAULT_BUDGET) -> ModelClass:
    """Named ballot classes: betweenness, cyclic, full (every model of ``spec``)
    and powerset (every relation)."""
    if name == "betweenness":
        if k != 3:
            raise PreconditionError("the betweenness class is ternary")
        return ModelClass.betweenness(domain)
    if name == "cyclic":
        return ModelClass.cyclic(domain, k)
    if name == "full":
        spec = spec or PropertySpec(("connected", "exclusive", "simplicial-transitive"))
        return ModelClass.of_spec(domain, k, spec, budget)
    if name == "powerset":
        return ModelClass.of_spec(domain, k, TRIVIAL, budget)
    raise PreconditionError(f"unknown model class {name!r}")


def _fam_label(W: CoalitionFamily) -> list:
    return W.sets()


def _timed(report: VerificationReport, start: float) -> VerificationReport:
    report.timing = {"seconds": round(time.perf_counter() - start, 3)}
    return report


# -- Theorem 1: betweenness-style first-order aggregation -------------------------

def verify_theorem1(domain: Domain, k: int, voters: VoterSet, model_class: ModelClass | str = "betweenness",
                    budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Uniform coalition rules passing P, IIA, UD and closure are exactly
    the dictatorships."""
    start = time.perf_counter()
    if domain.n < k + 1:
        raise PreconditionError(f"need at least k+1={k + 1} elements")
    mc = model_class_for(model_class, domain, k, budget=budget) if isinstance(model_class, str) else model_class
    D = ProductDomain(mc, voters)
    ud = check_UD(D)
    report = VerificationReport("arrow", {"n": domain.n, "k": k, "voters": list(voters.ids),
                                          "model_class": mc.name})
    report.notes.append(UD_NOTE)
    if not ud:
        report.notes.append("UD fails for this profile domain; the verdict is conditional")
    passing = []
    for W in CoalitionFamily.all_families(voters):
        rule = CoalitionRule(W)
        res = {"P": check_P(rule, D), "IIA": check_IIA(rule, D), "closure": check_closure(rule, D)}
        ok = all(res.values()) and ud.ok
        entry = {"family": _fam_label(W), "pass": ok,
                 **{name: r.ok for name, r in res.items()}}
        failed = next((name for name, r in res.items() if not r), None)
        if failed:
            entry["failed"] = failed
            entry["witness"] = _witness(res[failed].witness)
        if ok:
            passing.append(W)
            entry["dictator_check_D"] = check_D(rule, D)
            entry["dictator_U_family"] = principal_element(build_U_family(rule, D))
        report.candidates.append(entry)
    expected = [W for W in CoalitionFamily.all_families(voters) if is_ultrafilter(W)]
    principal = [W for W in CoalitionFamily.all_families(voters) if principal_element(W)]
    report.passing = [_fam_label(W) for W in passing]
    report.expected = [_fam_label(W) for W in expected]
    dictators_agree = all(
        e["dictator_check_D"] == e["dictator_U_family"] == principal_element(CoalitionFamily.from_sets(voters, e["family"]))
        and e["dictator_check_D"] is not None
        for e in report.candidates if e["pass"])
    report.checks = {"UD": ud.ok, "ultrafilters_are_principal": expected == principal,
                     "pass_set_matches": passing == expected, "dictators_agree": dictators_agree,
                     "dictators": [e["dictator_check_D"] for e in report.candidates if e["pass"]]}
    if passing == expected and expected == principal and dictators_agree:
        report.verdict = "confirmed" if ud.ok else "conditional"
    else:
        report.verdict = "counterexample"
    return _timed(report, start)


# -- metaproperty prerequisites ---------------------------------------------------

def metaproperty_certificates(spec: PropertySpec, domain: Domain, k: int, need: Iterable[str],
                              bounds: SearchBounds = SearchBounds()) -> dict:
    """Run the requested metaproperty checks; raise if any fails."""
    out = {}
    for name in need:
        if name == "contagious":
            r = verify_contagious(spec, domain, k, bounds)
            out[name] = {"ok": r.ok, "condition": r.condition, "j": r.j, "pairs": len(r.witnesses),
                         "failures": r.failures}
        else:
            fn = verify_implicative if name == "implicative" else verify_disjunctive
            r = fn(spec, domain, k, bounds)
            out[name] = {"ok": r.ok, "witness": r.witness.to_dict() if r.ok else r.witness}
        if not out[name]["ok"]:
            raise PreconditionError(f"{spec.name} is not verified {name} at n={domain.n}, k={k}: "
                                    f"{out[name].get('failures') or out[name].get('witness')}")
    return out


def _sec3_domain(domain, k, voters, ballots: ModelClass | None, budget):
    mc = ballots or ModelClass.of_spec(domain, k, TRIVIAL, budget)
    return ProductDomain(mc, voters)


def _sec3_axioms(rule, D, spec) -> dict:
    return {"unanimity": check_P(rule, D), "groundedness": check_groundedness(rule, D),
            "IIE": check_IIA(rule, D), "collective_rationality": check_collective_rationality(rule, D, spec)}


def _verify_filter_theorem(theorem: str, domain, k, voters, spec, need, expected_pred, reference,
                           certificates, ballots, budget) -> VerificationReport:
    start = time.perf_counter()
    if domain.n < k + 1:
        raise PreconditionError(f"need at least k+1={k + 1} elements")
    if not spec.clausal:
        raise PreconditionError("theorem verification needs a clause-defined property")
    certs = certificates if certificates is not None else metaproperty_certificates(spec, domain, k, need)
    missing = [n for n in need if not certs.get(n, {}).get("ok")]
    if missing:
        raise PreconditionError(f"metaproperties not verified: {', '.join(missing)}")
    D = _sec3_domain(domain, k, voters, ballots, budget)
    report = VerificationReport(theorem, {"n": domain.n, "k": k, "voters": list(voters.ids),
                                          "spec": list(spec.atoms), "ballots": D.model_class.name})
    report.checks["metaproperties"] = {n: {key: v for key, v in certs[n].items() if key != "witness"}
                                       for n in need}
    passing = []
    for W in CoalitionFamily.all_families(voters):
        rule = CoalitionRule(W)
        res = _sec3_axioms(rule, D, spec)
        ok = all(res.values())
        entry = {"family": _fam_label(W), "pass": ok, **{n: r.ok for n, r in res.items()}}
        failed = next((n for n, r in res.items() if not r), None)
        if failed:
            entry["failed"] = failed
            entry["witness"] = _witness(res[failed].witness)
        if ok:
            passing.append(W)
            ref = reference(W)
            entry["equals"] = ref.name if ref is not None else None
            entry["agrees_with_reference"] = bool(ref is not None and rules_agree(rule, ref, D))
        report.candidates.append(entry)
    expected = [W for W in CoalitionFamily.all_families(voters) if expected_pred(W)]
    report.passing = [_fam_label(W) for W in passing]
    report.expected = [_fam_label(W) for W in expected]
    agree = all(e["agrees_with_reference"] for e in report.candidates if e["pass"])
    report.checks.update(pass_set_matches=passing == expected, references_agree=agree,
                         passing_count=len(passing))
    report.verdict = "confirmed" if passing == expected and agree else "counterexample"
    return _timed(report, start)


def verify_oligarchy_theorem(domain: Domain, k: int, voters: VoterSet, spec: PropertySpec,
                             certificates: dict | None = None, ballots: ModelClass | None = None,
                             budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Passing families are exactly the proper filters; each passing rule is
    the oligarchy of the filter's least element."""
    def reference(W):
        core = least_element(W)
        return Oligarchy(frozenset(core)) if core else None
    return _verify_filter_theorem("oligarchy", domain, k, voters, spec, ("contagious", "implicative"),
                                  lambda W: is_filter(W).ok, reference, certificates, ballots, budget)


def verify_dictatorship_theorem(domain: Domain, k: int, voters: VoterSet, spec: PropertySpec,
                                certificates: dict | None = None, ballots: ModelClass | None = None,
                                budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Passing families are exactly the principal ultrafilters."""
    def reference(W):
        i = principal_element(W)
        return Dictatorship(i) if i else None
    return _verify_filter_theorem("dictatorship", domain, k, voters, spec,
                                  ("contagious", "implicative", "disjunctive"),
                                  lambda W: is_ultrafilter(W).ok, reference, certificates, ballots, budget)


def default_neutrality_rules(voters: VoterSet, domain: Domain, k: int) -> list:
    """Dictatorships, oligarchies, a quota rule and rules mixing two
    principal families across tuples."""
    rules = [Dictatorship(v) for v in voters.ids]
    rules.append(Oligarchy(frozenset(voters.ids)))
    if voters.m >= 2:
        rules.append(QuotaRule(voters.m // 2 + 1))
        first = domain.elements[:k]
        p1 = CoalitionFamily.principal(voters, [voters.ids[0]])
        p2 = CoalitionFamily.principal(voters, [voters.ids[1]])
        rules.append(CoalitionRule(p2, ((tuple(first), p1),)))
        rules.append(CoalitionRule(p1, ((substitute_at(tuple(first), 1, domain.elements[k]), p2),)))
    return rules


def verify_neutrality_lemma(domain: Domain, k: int, voters: VoterSet, spec: PropertySpec,
                            rules: Sequence[AggregationRule] | None = None,
                            certificates: dict | None = None, ballots: ModelClass | None = None,
                            budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Every supplied rule passing the axioms has one family of winning
    coalitions shared by all tuples."""
    start = time.perf_counter()
    if domain.n < k + 1:
        raise PreconditionError(f"need at least k+1={k + 1} elements")
    certs = certificates if certificates is not None else metaproperty_certificates(spec, domain, k, ("contagious",))
    if not certs.get("contagious", {}).get("ok"):
        raise PreconditionError("metaproperties not verified: contagious")
    D = _sec3_domain(domain, k, voters, ballots, budget)
    rules = list(rules) if rules is not None else default_neutrality_rules(voters, domain, k)
    report = VerificationReport("neutrality", {"n": domain.n, "k": k, "voters": list(voters.ids),
                                               "spec": list(spec.atoms), "ballots": D.model_class.name})
    report.checks["metaproperties"] = {"contagious": {key: v for key, v in certs["contagious"].items()}}
    bad = []
    for rule in rules:
        res = _sec3_axioms(rule, D, spec)
        ok = all(res.values())
        neutral = check_neutral(rule, D)
        entry = {"rule": rule.name, "pass": ok, "neutral": neutral.ok,
                 **{n: r.ok for n, r in res.items()}}
        if neutral.ok:
            entry["family"] = _fam_label(neutral.witness)
        failed = next((n for n, r in res.items() if not r), None)
        if failed:
            entry["failed"] = failed
            entry["witness"] = _witness(res[failed].witness)
        if ok:
            report.passing.append(rule.name)
            if not neutral.ok:
                bad.append(rule.name)
        report.candidates.append(entry)
    report.checks["non_neutral_passing_rules"] = bad
    report.verdict = "counterexample" if bad else "confirmed"
    return _timed(report, start)


# -- the permutation chain used to spread D_U between tuples ----------------------

def permutation_chain(a: Sequence, b: Sequence, spare) -> list:
    """Single-position substitutions turning ``a`` into ``b``.

    Entries of ``a`` missing from ``b`` are first overwritten with the
    entries of ``b`` missing from ``a``.  Each remaining position is then
    fixed by a three-step swap through ``spare``.  Returns a list of
    ``(tuple, (position, old, new))``; positions are 1-based.
    """
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise RelationError("tuples differ in arity")
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise RelationError("tuples must be injective")
    if spare in a or spare in b:
        raise PreconditionError(f"spare element {spare!r} occurs in the tuples")
    chain = []
    cur = a

    def step(pos, new):
        nonlocal cur
        old = cur[pos - 1]
        cur = substitute_at(cur, pos, new)
        chain.append((cur, (pos, old, new)))

    fresh = [x for x in b if x not in a]
    for pos, x in enumerate(a, start=1):
        if x not in b:
            step(pos, fresh.pop(0))
    for i in range(1, len(b) + 1):
        if cur[i - 1] == b[i - 1]:
            continue
        m = cur.index(b[i - 1]) + 1
        old_i = cur[i - 1]
        step(m, spare)
        step(i, b[i - 1])
        step(m, old_i)
    assert cur == b
    return chain


def check_chain(a: Sequence, b: Sequence, chain: list) -> bool:
    """Every step changes exactly one position and keeps the tuple injective."""
    cur = tuple(a)
    for t, (pos, old, new) in chain:
        diff = [i for i in range(len(cur)) if cur[i] != t[i]]
        if diff != [pos - 1] or cur[pos - 1] != old or t[pos - 1] != new or len(set(t)) != len(t):
            return False
        cur = t
    return cur == tuple(b) and len(chain) <= 4 * len(cur)


def axiom_profile(rule: AggregationRule, D, spec: PropertySpec | None = None) -> dict:
    """Verdicts of every axiom checker for one rule (used in reports)."""
    out = {"P": check_P(rule, D), "IIA": check_IIA(rule, D), "groundedness": check_groundedness(rule, D)}
    if D.is_product:
        out["closure"] = check_closure(rule, D)
    if spec is not None:
        out["collective_rationality"] = check_collective_rationality(rule, D, spec)
    result = {name: {"ok": r.ok, "witness": _witness(r.witness) if not r.ok else None}
              for name, r in out.items()}
    result["dictator"] = check_D(rule, D)
    return result
