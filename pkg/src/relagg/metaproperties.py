"""Windows P[S+, S-] and the contagious / implicative / disjunctive metaproperties.

A window is the class of relations satisfying a property that contain
every tuple of S+ and none of S-.  Each metaproperty asks for a window in
which one membership pattern of a few distinguished tuples is impossible
("condition 1") while several exemplar patterns are realised
("condition 2").  Condition 1 is an unsatisfiability question, answered
by a SAT oracle over the clause form (or by scanning the enumerated
window for properties given by predicate hooks).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Iterable, Sequence

from pysat.solvers import Solver

from .core import (Domain, KRelation, RelationError, delta_subsequences, injective_tuples,
                   insert_at, is_injective, substitute_at, tuple_count, tuple_index)
from .models import DEFAULT_BUDGET, Check, PropertySpec, model_masks
from .sat import SOLVER_NAME, EnumOracle, SatOracle, _cnf, bit_indices


class PreconditionError(ValueError):
    """Inputs violate an operation's precondition."""


# exemplar name -> (required, forbidden) positions among the distinguished tuples
PATTERNS = {
    "contagious": {"R1": ({0}, set()), "R0": (set(), {1})},
    "implicative": {"R0": (set(), {0, 1, 2}), "R1": ({0}, {1, 2}), "R2": ({1}, {0, 2}),
                    "R13": ({0, 2}, {1}), "R123": ({0, 1, 2}, set())},
    "disjunctive": {"R1": ({0}, {1}), "R2": ({1}, {0})},
}
# the pattern condition 1 rules out
COUNTER = {
    "contagious": ({0}, {1}),
    "implicative": ({0, 1}, {2}),
    "disjunctive": (set(), {0, 1}),
}
ARITY = {"contagious": 2, "implicative": 3, "disjunctive": 2}


@dataclass(frozen=True)
class PropertyWindow:
    """P[S+, S-]: relations satisfying ``spec`` with S+ inside and S- outside."""

    spec: PropertySpec
    s_plus: frozenset = frozenset()
    s_minus: frozenset = frozenset()

    def __post_init__(self):
        plus = frozenset(tuple(t) for t in self.s_plus)
        minus = frozenset(tuple(t) for t in self.s_minus)
        for t in plus | minus:
            if not is_injective(t):
                raise RelationError(f"window tuple {t!r} is not injective")
        if plus & minus:
            raise RelationError(f"S+ and S- overlap in {sorted(plus & minus)}")
        object.__setattr__(self, "s_plus", plus)
        object.__setattr__(self, "s_minus", minus)

    def masks(self, domain: Domain, k: int) -> tuple:
        index = tuple_index(domain, k)
        try:
            plus = sum(1 << index[t] for t in self.s_plus)
            minus = sum(1 << index[t] for t in self.s_minus)
        except KeyError as exc:
            raise RelationError(f"window tuple {exc} is not an injective {k}-tuple over the domain") from None
        return plus, minus

    def unit_clauses(self, domain: Domain, k: int) -> list:
        plus, minus = self.masks(domain, k)
        return [(0, 1 << t) for t in bit_indices(plus)] + [(1 << t, 0) for t in bit_indices(minus)]

    def __contains__(self, R: KRelation) -> bool:
        plus, minus = self.masks(R.domain, R.k)
        return R.bits & plus == plus and not R.bits & minus and self.spec.holds(R)

    def oracle(self, domain: Domain, k: int, budget: int = DEFAULT_BUDGET):
        """A fresh oracle over the window's relations."""
        if self.spec.clausal:
            return SatOracle(tuple_count(domain.n, k), self.spec.clauses(domain, k),
                             self.unit_clauses(domain, k))
        return EnumOracle(window_masks(self, domain, k, budget))

    def to_dict(self) -> dict:
        return {"spec": list(self.spec.atoms),
                "s_plus": sorted(list(t) for t in self.s_plus),
                "s_minus": sorted(list(t) for t in self.s_minus)}


def window_masks(w: PropertyWindow, domain: Domain, k: int, budget: int = DEFAULT_BUDGET):
    return model_masks(domain, k, w.spec, budget, extra_clauses=w.unit_clauses(domain, k))


def window_models(w: PropertyWindow, domain: Domain, k: int, budget: int = DEFAULT_BUDGET) -> list:
    """Every relation of the window, by exhaustive enumeration."""
    return [KRelation(domain, k, bits=int(m)) for m in window_masks(w, domain, k, budget)]


@dataclass
class MetaWitness:
    """A window, its distinguished tuples and the exemplar relations."""

    kind: str
    tuples: tuple
    window: PropertyWindow
    exemplars: dict
    transcript: dict = field(default_factory=dict)

    @property
    def domain(self) -> Domain:
        return next(iter(self.exemplars.values())).domain

    @property
    def k(self) -> int:
        return len(self.tuples[0])

    def check(self, budget: int = DEFAULT_BUDGET, exhaustive: bool = False) -> Check:
        """Re-verify from scratch.  ``exhaustive`` scans the enumerated window
        for condition 1 instead of asking the SAT oracle."""
        d, k = self.domain, self.k
        try:
            _preconditions(self.kind, self.window, self.tuples, d, k)
        except PreconditionError as exc:
            return Check(False, str(exc))
        index = tuple_index(d, k)
        ids = [index[t] for t in self.tuples]
        for name, (req, forb) in PATTERNS[self.kind].items():
            R = self.exemplars.get(name)
            if R is None:
                return Check(False, f"exemplar {name} missing")
            if R not in self.window:
                return Check(False, f"exemplar {name} lies outside the window")
            for p, t in enumerate(ids):
                if (R.bits >> t & 1) != (p in req):
                    if p in req or p in forb:
                        return Check(False, f"exemplar {name} has the wrong pattern on {self.tuples[p]!r}")
        req, forb = _pattern_masks(COUNTER[self.kind], ids)
        if exhaustive:
            o = EnumOracle(window_masks(self.window, d, k, budget))
        else:
            o = self.window.oracle(d, k, budget)
        with o:
            bad = o.find(req, forb)
        if bad is not None:
            return Check(False, ("condition 1", KRelation(d, k, bits=bad)))
        return Check(True)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tuples": [list(t) for t in self.tuples],
                "window": self.window.to_dict(),
                "exemplars": {n: [list(t) for t in R] for n, R in sorted(self.exemplars.items())},
                "transcript": self.transcript}


def _pattern_masks(pattern, ids) -> tuple:
    req, forb = pattern
    return sum(1 << ids[p] for p in req), sum(1 << ids[p] for p in forb)


def _preconditions(kind: str, w: PropertyWindow, tuples: Sequence, d: Domain, k: int) -> None:
    if len(tuples) != ARITY[kind]:
        raise PreconditionError(f"{kind} needs {ARITY[kind]} distinguished tuples")
    if len(set(tuples)) != len(tuples):
        raise PreconditionError(f"distinguished tuples must be pairwise distinct: {list(tuples)!r}")
    index = tuple_index(d, k)
    for t in tuples:
        if t not in index:
            raise PreconditionError(f"{t!r} is not an injective {k}-tuple over the domain")
        if t in w.s_plus or t in w.s_minus:
            raise PreconditionError(f"{t!r} lies in S+ or S-")
    w.masks(d, k)


def verify_window(kind: str, w: PropertyWindow, tuples: Sequence, d: Domain, k: int,
                  budget: int = DEFAULT_BUDGET) -> Check:
    """Check both conditions of a metaproperty for one explicit window.

    Returns ``Check(True, MetaWitness)`` or ``Check(False, reason)``; the
    reason names the failed condition or the missing exemplar.
    """
    tuples = tuple(tuple(t) for t in tuples)
    _preconditions(kind, w, tuples, d, k)
    index = tuple_index(d, k)
    ids = [index[t] for t in tuples]
    with w.oracle(d, k, budget) as o:
        req, forb = _pattern_masks(COUNTER[kind], ids)
        bad = o.find(req, forb)
    if bad is not None:
        return Check(False, {"condition": 1, "counterexample": [list(t) for t in KRelation(d, k, bits=bad)]})
    exemplars = {}
    for name, pattern in PATTERNS[kind].items():
        with w.oracle(d, k, budget) as o:
            found = o.find(*_pattern_masks(pattern, ids))
        if found is None:
            return Check(False, {"condition": 2, "missing_exemplar": name})
        exemplars[name] = KRelation(d, k, bits=found)
    return Check(True, MetaWitness(kind, tuples, w, exemplars, {"condition_1": "unsatisfiable"}))


def verify_ab_contagious(w: PropertyWindow, a: Sequence, b: Sequence, d: Domain, k: int,
                         budget: int = DEFAULT_BUDGET) -> Check:
    """Is the property a/b contagious via this window?"""
    return verify_window("contagious", w, (tuple(a), tuple(b)), d, k, budget)


# -- witness search --------------------------------------------------------------

@dataclass(frozen=True)
class SearchBounds:
    """Caps on |S+| and |S-| (default k+2) and on CEGAR rounds."""

    cap_plus: int | None = None
    cap_minus: int | None = None
    max_rounds: int = 48

    def caps(self, k: int) -> tuple:
        return (k + 2 if self.cap_plus is None else self.cap_plus,
                k + 2 if self.cap_minus is None else self.cap_minus)


@lru_cache(maxsize=None)
def _clause_index(spec: PropertySpec, domain: Domain, k: int) -> tuple:
    clauses = spec.clauses(domain, k)
    by_premise: dict = {}
    positive = 0
    for c in clauses:
        for t in bit_indices(c[0]):
            by_premise.setdefault(t, []).append(c)
        positive |= c[1]
    horn = all(c[1].bit_count() <= 1 for c in clauses)
    return clauses, by_premise, positive, horn


def _working_tuples(elements: Iterable, domain: Domain, k: int) -> list:
    index = tuple_index(domain, k)
    keep = set(elements)
    return [index[t] for t in injective_tuples(domain, k) if keep.issuperset(t)]


def _window_from_masks(spec, domain, k, plus: int, minus: int) -> PropertyWindow:
    space = injective_tuples(domain, k)
    return PropertyWindow(spec, frozenset(space[t] for t in bit_indices(plus)),
                          frozenset(space[t] for t in bit_indices(minus)))


def _try_window(kind, spec, domain, k, ids, plus, minus, caps):
    if plus.bit_count() > caps[0] or minus.bit_count() > caps[1]:
        return None
    if any((plus | minus) >> t & 1 for t in ids):
        return None
    space = injective_tuples(domain, k)
    w = _window_from_masks(spec, domain, k, plus, minus)
    result = verify_window(kind, w, [space[t] for t in ids], domain, k)
    return result.witness if result else None


def _minimize(spec, domain, k, ids, counter, plus: int, minus: int) -> tuple:
    """Drop window tuples one at a time while condition 1 still holds."""
    T = tuple_count(domain.n, k)
    clauses = spec.clauses(domain, k)
    req, forb = _pattern_masks(counter, ids)

    def still_forced(p, m):
        units = [(0, 1 << t) for t in bit_indices(p)] + [(1 << t, 0) for t in bit_indices(m)]
        with SatOracle(T, clauses, units) as o:
            return o.find(req, forb) is None

    for t in bit_indices(plus):
        if still_forced(plus & ~(1 << t), minus):
            plus &= ~(1 << t)
    for t in bit_indices(minus):
        if still_forced(plus, minus & ~(1 << t)):
            minus &= ~(1 << t)
    return plus, minus


def _cegar(kind, spec, domain, k, ids, candidates, bounds) -> tuple:
    """Search exemplar copies whose agreement window rules out the counter pattern.

    Each exemplar is a full model; the window is every candidate tuple on
    which all copies agree.  A counterexample model M is blocked by
    demanding some candidate tuple agreed-in but missing from M, or
    agreed-out but present in M.
    """
    T = tuple_count(domain.n, k)
    clauses = spec.clauses(domain, k)
    names = list(PATTERNS[kind])
    ncopy = len(names)
    var = lambda c, t: c * T + t + 1
    top = ncopy * T
    plus_v, minus_v = {}, {}
    with Solver(name=SOLVER_NAME) as s:
        for c, name in enumerate(names):
            for lits in _cnf(clauses):
                s.add_clause([l + c * T if l > 0 else l - c * T for l in lits])
            req, forb = PATTERNS[kind][name]
            for p, t in enumerate(ids):
                if p in req:
                    s.add_clause([var(c, t)])
                elif p in forb:
                    s.add_clause([-var(c, t)])
        for t in candidates:
            top += 1
            plus_v[t] = top
            top += 1
            minus_v[t] = top
            for c in range(ncopy):
                s.add_clause([-plus_v[t], var(c, t)])
                s.add_clause([-minus_v[t], -var(c, t)])
        req, forb = _pattern_masks(COUNTER[kind], ids)
        for rounds in range(1, bounds.max_rounds + 1):
            if not s.solve():
                return None, rounds, "exemplar copies exhausted"
            model = set(l for l in s.get_model() if l > 0)
            plus = minus = 0
            for t in candidates:
                held = [var(c, t) in model for c in range(ncopy)]
                if all(held):
                    plus |= 1 << t
                elif not any(held):
                    minus |= 1 << t
            units = [(0, 1 << t) for t in bit_indices(plus)] + [(1 << t, 0) for t in bit_indices(minus)]
            with SatOracle(T, clauses, units) as o:
                bad = o.find(req, forb)
            if bad is None:
                return (plus, minus), rounds, "found"
            s.add_clause([plus_v[t] for t in candidates if not bad >> t & 1]
                         + [minus_v[t] for t in candidates if bad >> t & 1])
    return None, bounds.max_rounds, "round bound reached"


def search_window(kind: str, spec: PropertySpec, d: Domain, k: int, tuples: Sequence,
                  bounds: SearchBounds = SearchBounds()) -> Check:
    """Find S+, S- (over the elements of ``tuples``) making the distinguished
    tuples a witness of ``kind``.  Deterministic for fixed inputs."""
    tuples = tuple(tuple(t) for t in tuples)
    index = tuple_index(d, k)
    ids = [index[t] for t in tuples]
    if not spec.clausal:
        return Check(False, "search needs a clause form; supply an explicit window")
    clauses, by_premise, positive, horn = _clause_index(spec, d, k)
    caps = bounds.caps(k)
    # pruning: a tuple that no clause can force is never forced by a window
    if kind == "contagious" and not positive >> ids[1] & 1:
        return Check(False, "target tuple never occurs as a forced conclusion")
    if kind == "implicative" and not positive >> ids[2] & 1:
        return Check(False, "target tuple never occurs as a forced conclusion")
    if kind == "disjunctive" and horn:
        return Check(False, "every clause is Horn, so models are closed under intersection")
    for plus, minus in _seeds(kind, clauses, by_premise, ids):
        hit = _try_window(kind, spec, d, k, ids, plus, minus, caps)
        if hit is not None:
            hit.transcript["route"] = "clause seed"
            return Check(True, hit)
    elements = sorted({x for t in tuples for x in t}, key=d.index)
    if len(elements) < k + 1:
        spare = [x for x in d.elements if x not in elements]
        elements = sorted(elements + spare[: k + 1 - len(elements)], key=d.index)
    candidates = [t for t in _working_tuples(elements, d, k) if t not in ids]
    found, rounds, status = _cegar(kind, spec, d, k, ids, candidates, bounds)
    if found is None:
        return Check(False, f"no window within bounds ({status} after {rounds} rounds)")
    plus, minus = _minimize(spec, d, k, ids, COUNTER[kind], *found)
    hit = _try_window(kind, spec, d, k, ids, plus, minus, caps)
    if hit is None:
        return Check(False, f"minimal window exceeds caps |S+|<={caps[0]}, |S-|<={caps[1]}")
    hit.transcript.update(route="exemplar-copy refinement", rounds=rounds)
    return Check(True, hit)


def _seeds(kind, clauses, by_premise, ids):
    if kind == "contagious":
        x, y = ids
        for premise, conclusion in by_premise.get(x, ()):
            if conclusion == 1 << y:
                yield premise & ~(1 << x), 0
    elif kind == "implicative":
        a1, a2, a3 = ids
        for premise, conclusion in by_premise.get(a1, ()):
            if conclusion == 1 << a3 and premise >> a2 & 1:
                yield premise & ~(1 << a1) & ~(1 << a2), 0
    else:
        a1, a2 = ids
        both = (1 << a1) | (1 << a2)
        for premise, conclusion in clauses:
            if conclusion & both == both:
                yield premise, conclusion & ~both


def _distinct_sequences(d: Domain, k: int):
    """All (a_1..a_k, b) of pairwise distinct elements, canonical order."""
    for seq in permutations(d.elements, k + 1):
        yield seq[:k], seq[k]


def contagious_pairs(d: Domain, k: int, condition: int, j: int | None = None) -> list:
    """The (a, c) pairs a contagious property must cover.

    Condition 2: c = a with position j replaced by b, for every j.
    Condition 1 (fixed j): c ranges over the length-k subsequences of a
    with b inserted at position j that keep b.
    """
    out = []
    for a, b in _distinct_sequences(d, k):
        if condition == 2:
            for jj in range(1, k + 1):
                out.append((a, substitute_at(a, jj, b)))
        else:
            s = insert_at(a, j, b)
            for c in delta_subsequences(s, 1, required={j}):
                out.append((a, c))
    return list(dict.fromkeys(out))


@dataclass
class ContagiousReport:
    condition: int | None
    j: int | None
    witnesses: list
    failures: dict

    @property
    def ok(self) -> bool:
        return self.condition is not None

    def to_dict(self) -> dict:
        return {"condition": self.condition, "j": self.j, "pairs": len(self.witnesses),
                "witnesses": [w.to_dict() for w in self.witnesses], "failures": self.failures}


def verify_contagious(spec: PropertySpec, d: Domain, k: int,
                      bounds: SearchBounds = SearchBounds()) -> ContagiousReport:
    """Establish condition 2 if possible, else condition 1 for the least j."""
    if d.n < k + 1:
        raise PreconditionError(f"contagiousness needs at least k+1={k + 1} elements")
    failures = {}
    attempts = [(2, None)] + [(1, j) for j in range(1, k + 2)]
    for condition, j in attempts:
        witnesses = []
        for a, c in contagious_pairs(d, k, condition, j):
            r = search_window("contagious", spec, d, k, (a, c), bounds)
            if not r:
                key = "condition 2" if condition == 2 else f"condition 1, j={j}"
                failures[key] = {"pair": [list(a), list(c)], "reason": r.witness}
                break
            witnesses.append(r.witness)
        else:
            return ContagiousReport(condition, j, witnesses, failures)
    return ContagiousReport(None, None, [], failures)


def _search_existential(kind: str, spec: PropertySpec, d: Domain, k: int,
                        bounds: SearchBounds) -> Check:
    if d.n < k + 1:
        raise PreconditionError(f"{kind} search needs at least k+1={k + 1} elements")
    if not spec.clausal:
        return Check(False, "search needs a clause form; supply an explicit window")
    clauses, _, positive, horn = _clause_index(spec, d, k)
    if not positive:
        return Check(False, "no clause forces any tuple")
    if kind == "disjunctive" and horn:
        return Check(False, "every clause is Horn, so models are closed under intersection")
    working = set(_working_tuples(d.elements[: k + 1], d, k))
    space = injective_tuples(d, k)
    tried = set()
    for premise, conclusion in clauses:
        if not (premise | conclusion) or any(t not in working for t in bit_indices(premise | conclusion)):
            continue
        if kind == "implicative":
            if conclusion.bit_count() != 1:
                continue
            ps = bit_indices(premise)
            combos = [(x, y, bit_indices(conclusion)[0]) for x in ps for y in ps if x != y]
        else:
            cs = bit_indices(conclusion)
            combos = [(x, y) for x in cs for y in cs if x < y]
        for ids in combos:
            if ids in tried:
                continue
            tried.add(ids)
            r = search_window(kind, spec, d, k, [space[t] for t in ids], bounds)
            if r:
                return r
    return Check(False, f"no {kind} witness among {len(tried)} clause-derived tuple choices")


def verify_implicative(spec: PropertySpec, d: Domain, k: int, bounds: SearchBounds = SearchBounds(),
                       witness: tuple | None = None) -> Check:
    """Search for (or verify an explicit ``(window, tuples)``) implicative witness."""
    if witness is not None:
        w, tuples = witness
        return verify_window("implicative", w, tuples, d, k)
    return _search_existential("implicative", spec, d, k, bounds)


def verify_disjunctive(spec: PropertySpec, d: Domain, k: int, bounds: SearchBounds = SearchBounds(),
                       witness: tuple | None = None) -> Check:
    """Search for (or verify an explicit ``(window, tuples)``) disjunctive witness."""
    if witness is not None:
        w, tuples = witness
        return verify_window("disjunctive", w, tuples, d, k)
    return _search_existential("disjunctive", spec, d, k, bounds)


# -- the hand-made witnesses for simplicial transitivity and connectedness --------

def simplicial_window_family(a: Sequence, b, j: int) -> list:
    """Subsequences of a with b inserted after position j that keep a_j and b."""
    s = insert_at(tuple(a), j + 1, b)
    return delta_subsequences(s, 1, required={j, j + 1})


def simplicial_contagious_witness(spec: PropertySpec, a: Sequence, b, j: int) -> tuple:
    """Window and (a, a with a_j replaced by b) for the simplicial a/c instance."""
    a = tuple(a)
    w = PropertyWindow(spec, frozenset(simplicial_window_family(a, b, j)))
    return w, (a, substitute_at(a, j, b))


def simplicial_implicative_witnesses(spec: PropertySpec, a: Sequence, b, j: int) -> list:
    """Both orders of the two premise tuples; needs j >= 2."""
    a = tuple(a)
    if j < 2:
        raise PreconditionError("the implicative window drops a_1, so j must be at least 2")
    s = insert_at(a, j + 1, b)
    dropped = s[1:]
    fam = set(simplicial_window_family(a, b, j)) - {dropped}
    w = PropertyWindow(spec, frozenset(fam))
    c = substitute_at(a, j, b)
    return [(w, (a, dropped, c)), (w, (dropped, a, c))]


def connected_disjunctive_placements(spec: PropertySpec, a: Sequence, tau1: Sequence,
                                     tau2: Sequence) -> dict:
    """The remaining arrangements of a's k-set, placed in S+ or in S-."""
    from .core import apply_permutation
    a = tuple(a)
    k = len(a)
    a1, a2 = apply_permutation(a, tau1), apply_permutation(a, tau2)
    if a1 == a2:
        raise PreconditionError("tau1 and tau2 must differ")
    rest = frozenset(p for p in permutations(a) if p not in (a1, a2))
    return {"S+": (PropertyWindow(spec, rest, frozenset()), (a1, a2)),
            "S-": (PropertyWindow(spec, frozenset(), rest), (a1, a2))}


def disjunctive_placement_report(spec: PropertySpec, d: Domain, a: Sequence, tau1: Sequence,
                                 tau2: Sequence) -> dict:
    """Verify both placements and say which satisfy the definition."""
    out = {}
    for name, (w, tuples) in connected_disjunctive_placements(spec, a, tau1, tau2).items():
        r = verify_window("disjunctive", w, tuples, d, len(tuple(a)))
        out[name] = {"valid": r.ok, "detail": r.witness.to_dict() if r.ok else r.witness}
    out["valid_placements"] = [n for n in ("S+", "S-") if out[n]["valid"]]
    return out
