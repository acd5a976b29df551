"""Winning coalitions, the D_U / E_U relations and filter structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Sequence

from .aggregation import (AggregationRule, ProductDomain, Profile, ProfileDomain, RuleError,
                          VoterSet, _enumerable, _use_pattern, evaluate, realizable_supports,
                          win_table)
from .core import KRelation, RelationError, injective_tuples, tuple_index
from .models import Check


class CoalitionFamily:
    """A set of coalitions, stored as a bitset over coalition masks."""

    __slots__ = ("voters", "bits")

    def __init__(self, voters: VoterSet, bits: int = 0):
        if bits < 0 or bits >> (1 << voters.m):
            raise RuleError("family bitset out of range")
        self.voters = voters
        self.bits = int(bits)

    @classmethod
    def from_sets(cls, voters: VoterSet, sets: Iterable[Iterable]) -> "CoalitionFamily":
        bits = 0
        for s in sets:
            bits |= 1 << voters.mask(s)
        return cls(voters, bits)

    @classmethod
    def from_masks(cls, voters: VoterSet, masks: Iterable[int]) -> "CoalitionFamily":
        bits = 0
        for m in masks:
            bits |= 1 << m
        return cls(voters, bits)

    @classmethod
    def principal(cls, voters: VoterSet, core: Iterable) -> "CoalitionFamily":
        """``{U : core ⊆ U}``."""
        c = voters.mask(core)
        return cls.from_masks(voters, (m for m in range(1 << voters.m) if m & c == c))

    @classmethod
    def majority(cls, voters: VoterSet) -> "CoalitionFamily":
        return cls.from_masks(voters, (m for m in range(1 << voters.m)
                                       if 2 * m.bit_count() > voters.m))

    @classmethod
    def all_families(cls, voters: VoterSet) -> Iterator["CoalitionFamily"]:
        """Every family over the voter set, in bitset order."""
        for bits in range(1 << (1 << voters.m)):
            yield cls(voters, bits)

    def masks(self) -> list:
        out, bits, m = [], self.bits, 0
        while bits:
            if bits & 1:
                out.append(m)
            bits >>= 1
            m += 1
        return out

    def has_mask(self, mask: int) -> bool:
        return bool(self.bits >> mask & 1)

    def __contains__(self, coalition) -> bool:
        if isinstance(coalition, int):
            return self.has_mask(coalition)
        return self.has_mask(self.voters.mask(coalition))

    def sets(self) -> list:
        return [self.voters.sorted_ids(m) for m in self.masks()]

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __eq__(self, other) -> bool:
        return isinstance(other, CoalitionFamily) and (self.voters, self.bits) == (other.voters, other.bits)

    def __hash__(self) -> int:
        return hash((self.voters, self.bits))

    def label(self) -> str:
        return "{" + ", ".join("{" + ",".join(s) + "}" for s in self.sets()) + "}"

    def __repr__(self) -> str:
        return f"CoalitionFamily({self.label()})"

    def to_dict(self) -> dict:
        return {"voters": list(self.voters.ids), "sets": self.sets()}

    @classmethod
    def from_dict(cls, data: dict) -> "CoalitionFamily":
        try:
            voters = VoterSet(data["voters"])
            return cls.from_sets(voters, data["sets"])
        except KeyError as exc:
            raise RuleError(f"family JSON missing {exc}") from exc


@dataclass(frozen=True)
class NotCoalitionDetermined:
    """Two profiles with the same supporters of a tuple but different outcomes."""

    tuple: tuple
    first: Profile
    second: Profile

    def to_dict(self) -> dict:
        return {"tuple": list(self.tuple), "profiles": [self.first.to_dict(), self.second.to_dict()]}


def supporters(p: Profile, t: Sequence) -> frozenset:
    """Voters whose relation contains ``t``."""
    t = tuple(t)
    if len(t) != p.k:
        raise RelationError(f"tuple {t!r} does not have arity {p.k}")
    if t not in tuple_index(p.domain, p.k):
        raise RelationError(f"{t!r} is not an injective tuple over the profile's domain")
    return frozenset(v for v, R in zip(p.voters.ids, p.relations) if t in R)


def winning_coalitions(rule: AggregationRule, D: ProfileDomain, t: Sequence,
                       engine: str = "auto"):
    """The observed winning coalitions for ``t``, or NotCoalitionDetermined.

    Only supporter sets that occur somewhere in D are decided; the family
    lists those whose profiles put ``t`` in the output.
    """
    t = tuple(t)
    index = tuple_index(D.domain, D.k)
    if t not in index:
        raise RelationError(f"{t!r} is not an injective tuple over the domain")
    ti = index[t]
    if _use_pattern(rule, D, engine):
        table = win_table(rule, D.voters, D.domain, D.k)
        return CoalitionFamily.from_masks(
            D.voters, (s for s in realizable_supports(D, ti) if table[ti] >> s & 1))
    _enumerable(D)
    seen: dict = {}
    for p in D:
        s = p.support[ti]
        got = bool(evaluate(rule, p).bits >> ti & 1)
        if s not in seen:
            seen[s] = (got, p)
        elif seen[s][0] != got:
            return NotCoalitionDetermined(t, seen[s][1], p)
    return CoalitionFamily.from_masks(D.voters, (s for s, (got, _) in seen.items() if got))


def profiles_U_a(D: ProfileDomain, U: Iterable, t: Sequence) -> list:
    """Profiles where exactly the voters of U hold ``t``."""
    t = tuple(t)
    umask = D.voters.mask(U)
    if isinstance(D, ProductDomain):
        models = D.model_class.models()
        with_t = [R for R in models if t in R]
        without = [R for R in models if t not in R]
        choices = [with_t if umask >> i & 1 else without for i in range(D.voters.m)]
        return [Profile(D.voters, combo) for combo in product(*choices)]
    ti = tuple_index(D.domain, D.k)[t]
    return [p for p in D if p.support[ti] == umask]


@dataclass
class URelation:
    """D_U or E_U together with the tuples that hold only vacuously."""

    kind: str
    coalition: list
    relation: KRelation
    vacuous: KRelation
    notes: dict = field(default_factory=dict)

    @property
    def witnessed(self) -> KRelation:
        """Tuples that hold with at least one witnessing profile."""
        return self.relation - self.vacuous

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coalition": self.coalition,
                "relation": self.relation.to_dict(),
                "vacuous": [list(t) for t in self.vacuous], **self.notes}


def _u_relation(rule, D, U, kind: str, engine: str) -> URelation:
    umask = D.voters.mask(U)
    T = len(injective_tuples(D.domain, D.k))
    holds = vacuous = 0
    if _use_pattern(rule, D, engine):
        table = win_table(rule, D.voters, D.domain, D.k)
        for t in range(T):
            if kind == "D":
                relevant = [umask] if umask in realizable_supports(D, t) else []
            else:
                relevant = [s for s in realizable_supports(D, t) if s & umask == umask]
            if not relevant:
                vacuous |= 1 << t
                holds |= 1 << t
            elif all(table[t] >> s & 1 for s in relevant):
                holds |= 1 << t
    else:
        _enumerable(D)
        seen = failed = 0
        for p in D:
            out = evaluate(rule, p).bits
            for t, s in enumerate(p.support):
                hit = s == umask if kind == "D" else s & umask == umask
                if hit:
                    seen |= 1 << t
                    if not out >> t & 1:
                        failed |= 1 << t
        full = (1 << T) - 1
        vacuous = full & ~seen
        holds = full & ~failed
    rel = KRelation(D.domain, D.k, bits=holds)
    return URelation(kind + "_U", D.voters.sorted_ids(umask), rel,
                     KRelation(D.domain, D.k, bits=vacuous))


def compute_D_U(rule: AggregationRule, D: ProfileDomain, U: Iterable,
                engine: str = "auto") -> URelation:
    """Tuples ``t`` such that every profile where exactly U holds ``t``
    outputs ``t``.  Tuples with no such profile are vacuous."""
    return _u_relation(rule, D, U, "D", engine)


def compute_E_U(rule: AggregationRule, D: ProfileDomain, U: Iterable,
                engine: str = "auto") -> URelation:
    """Tuples ``t`` output by every profile where (at least) U holds ``t``.

    The notes compare with D_U: ``within_D_U`` is False if some tuple is in
    E_U but not in D_U while having witnesses for both.
    """
    e = _u_relation(rule, D, U, "E", engine)
    d = _u_relation(rule, D, U, "D", engine)
    escaped = (e.relation.bits & ~d.relation.bits) & ~d.vacuous.bits & ~e.vacuous.bits
    e.notes = {"within_D_U": escaped == 0,
               "escaping": [list(t) for t in KRelation(D.domain, D.k, bits=escaped)]}
    return e


def build_U_family(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> CoalitionFamily:
    """Coalitions U whose D_U holds for at least one non-vacuous tuple."""
    masks = []
    for umask in range(1 << D.voters.m):
        r = compute_D_U(rule, D, D.voters.coalition(umask), engine)
        if r.witnessed:
            masks.append(umask)
    return CoalitionFamily.from_masks(D.voters, masks)


def all_or_nothing_report(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> dict:
    """Does each D_U hold on all witnessed tuples or on none?

    The ultrafilter argument assumes that one witnessed tuple in D_U puts
    every tuple there.  ``mixed`` lists coalitions where that fails.
    """
    mixed = []
    for umask in range(1 << D.voters.m):
        r = compute_D_U(rule, D, D.voters.coalition(umask), engine)
        seen = (1 << len(injective_tuples(D.domain, D.k))) - 1 & ~r.vacuous.bits
        held = r.relation.bits & seen
        if held and held != seen:
            mixed.append({"coalition": r.coalition,
                          "holds": len(KRelation(D.domain, D.k, bits=held)),
                          "witnessed": bin(seen).count("1")})
    return {"holds": not mixed, "mixed": mixed}


# -- filter structure -----------------------------------------------------------

def is_filter(fam: CoalitionFamily) -> Check:
    """Proper filter: contains I, not the empty set, upward and intersection closed.

    Witness: ``(condition, sets)`` for the first violated condition.
    """
    v = fam.voters
    full = v.full_mask
    if not fam.has_mask(full):
        return Check(False, ("contains-I", [list(v.ids)]))
    if fam.has_mask(0):
        return Check(False, ("proper", [[]]))
    masks = fam.masks()
    for u in masks:
        for w in range(1 << v.m):
            if w & u == u and not fam.has_mask(w):
                return Check(False, ("upward-closed", [v.sorted_ids(u), v.sorted_ids(w)]))
    for i, u in enumerate(masks):
        for w in masks[i + 1:]:
            if not fam.has_mask(u & w):
                return Check(False, ("intersection-closed", [v.sorted_ids(u), v.sorted_ids(w)]))
    return Check(True)


@dataclass
class UltrafilterReport:
    F1: Check
    F2: Check
    F3: Check
    F4: Check

    @property
    def ok(self) -> bool:
        return all((self.F1.ok, self.F2.ok, self.F3.ok, self.F4.ok))

    def __bool__(self) -> bool:
        return self.ok

    @property
    def failed(self) -> list:
        return [name for name in ("F1", "F2", "F3", "F4") if not getattr(self, name).ok]

    def to_dict(self) -> dict:
        return {name: {"ok": c.ok, "witness": c.witness}
                for name, c in zip(("F1", "F2", "F3", "F4"), (self.F1, self.F2, self.F3, self.F4))}


def is_ultrafilter(fam: CoalitionFamily) -> UltrafilterReport:
    """F1 contains I; F2 upward closed; F3 members pairwise intersect;
    F4 prime: whenever a member splits into two disjoint parts, one part is
    a member.  Conditions are checked independently."""
    v = fam.voters
    full = v.full_mask
    masks = fam.masks()
    ids = v.sorted_ids
    f1 = Check(True) if fam.has_mask(full) else Check(False, [list(v.ids)])
    f2 = Check(True)
    for u in masks:
        bad = next((w for w in range(1 << v.m) if w & u == u and not fam.has_mask(w)), None)
        if bad is not None:
            f2 = Check(False, [ids(u), ids(bad)])
            break
    f3 = Check(True)
    for i, u in enumerate(masks):
        bad = next((w for w in masks[i:] if not u & w), None)
        if bad is not None:
            f3 = Check(False, [ids(u), ids(bad)])
            break
    f4 = Check(True)
    for w in masks:
        sub = w
        found = None
        while True:  # subsets of w in decreasing mask order
            rest = w & ~sub
            if sub >= rest and not fam.has_mask(sub) and not fam.has_mask(rest):
                found = [ids(w), ids(rest), ids(sub)]
                break
            if sub == 0:
                break
            sub = (sub - 1) & w
        if found:
            f4 = Check(False, found)
            break
    return UltrafilterReport(f1, f2, f3, f4)


def principal_element(fam: CoalitionFamily) -> str | None:
    """Voter i with fam == {U : i in U}, if any."""
    for i in fam.voters.ids:
        if fam == CoalitionFamily.principal(fam.voters, [i]):
            return i
    return None


def least_element(fam: CoalitionFamily) -> list | None:
    """The member contained in all others, if there is one."""
    masks = fam.masks()
    if not masks:
        return None
    core = fam.voters.full_mask
    for m in masks:
        core &= m
    return fam.voters.sorted_ids(core) if fam.has_mask(core) else None
