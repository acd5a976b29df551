"""Profiles, aggregation rules and checkers for the aggregation axioms.

Two evaluation engines back every checker:

* ``"enumerate"`` walks the profiles of the domain one by one;
* ``"pattern"`` works on product domains with coalition-determined rules.
  Whether a tuple enters the output then depends only on its supporter
  set, and voters pick ballots independently.  So a question about all
  profiles reduces to a question about which local membership patterns
  single ballots can realise on a handful of tuples.

``engine="auto"`` uses the pattern engine wherever it applies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .core import (BudgetExceeded, Domain, KRelation, RelationError, injective_tuples,
                   restrict, tuple_count)
from .models import (DEFAULT_BUDGET, Check, PropertySpec, all_betweenness, all_cyclic,
                     model_masks)
from .sat import SatOracle, bit_indices

# profiles walked by the enumerate engine before giving up
ENUMERATION_LIMIT = 200_000
# spec classes with at most this many candidate subsets are materialised eagerly
_EAGER_SCAN = 1 << 20

UD_NOTE = ("UD is checked against restriction to the whole (k+1)-element subset; "
           "the formula's restriction to k of those elements is weaker.")


class RuleError(ValueError):
    """A rule cannot be evaluated on the given profile or domain."""


class VoterSet:
    """Ordered voter ids; coalitions are int masks with bit i for voter i."""

    __slots__ = ("ids", "_pos")

    def __init__(self, ids: Iterable):
        ids = tuple(str(i) for i in ids)
        if not ids:
            raise RuleError("need at least one voter")
        if len(set(ids)) != len(ids):
            raise RuleError(f"duplicate voter ids {ids!r}")
        if len(ids) > 16:
            raise RuleError("at most 16 voters are supported")
        self.ids = ids
        self._pos = {v: i for i, v in enumerate(ids)}

    @classmethod
    def of_size(cls, m: int) -> "VoterSet":
        return cls(str(i) for i in range(1, m + 1))

    @property
    def m(self) -> int:
        return len(self.ids)

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def index(self, voter) -> int:
        try:
            return self._pos[str(voter)]
        except KeyError:
            raise RuleError(f"unknown voter {voter!r}") from None

    def mask(self, coalition: Iterable) -> int:
        out = 0
        for v in coalition:
            out |= 1 << self.index(v)
        return out

    def coalition(self, mask: int) -> frozenset:
        return frozenset(self.ids[i] for i in range(self.m) if mask >> i & 1)

    def sorted_ids(self, mask: int) -> list:
        return [self.ids[i] for i in range(self.m) if mask >> i & 1]

    def __iter__(self):
        return iter(self.ids)

    def __len__(self) -> int:
        return self.m

    def __eq__(self, other) -> bool:
        return isinstance(other, VoterSet) and self.ids == other.ids

    def __hash__(self) -> int:
        return hash(self.ids)

    def __repr__(self) -> str:
        return f"VoterSet({list(self.ids)!r})"


@dataclass(frozen=True)
class Profile:
    """One relation per voter, all over the same domain and arity."""

    voters: VoterSet
    relations: tuple

    def __post_init__(self):
        rels = tuple(self.relations)
        object.__setattr__(self, "relations", rels)
        if len(rels) != self.voters.m:
            raise RuleError(f"{len(rels)} relations for {self.voters.m} voters")
        first = rels[0]
        for R in rels[1:]:
            if R.domain != first.domain or R.k != first.k:
                raise RuleError("profile relations disagree on domain or arity")

    @property
    def domain(self) -> Domain:
        return self.relations[0].domain

    @property
    def k(self) -> int:
        return self.relations[0].k

    def __getitem__(self, voter) -> KRelation:
        return self.relations[self.voters.index(voter)]

    @cached_property
    def support(self) -> tuple:
        """Per canonical tuple index, the mask of voters holding it."""
        masks = [0] * tuple_count(self.domain.n, self.k)
        for i, R in enumerate(self.relations):
            for t in bit_indices(R.bits):
                masks[t] |= 1 << i
        return tuple(masks)

    def to_dict(self) -> dict:
        return {"voters": list(self.voters.ids),
                "relations": {v: R.to_dict() for v, R in zip(self.voters.ids, self.relations)}}

    @classmethod
    def from_dict(cls, data: dict) -> "Profile":
        try:
            voters = VoterSet(data["voters"])
            rels = [KRelation.from_dict(data["relations"][v]) for v in voters.ids]
        except KeyError as exc:
            raise RuleError(f"profile JSON missing {exc}") from exc
        return cls(voters, tuple(rels))

    def __repr__(self) -> str:
        return "Profile(" + "; ".join(f"{v}: {R!r}" for v, R in zip(self.voters, self.relations)) + ")"


# -- model classes --------------------------------------------------------------

class ModelClass:
    """The ballots a voter may cast: a finite class of relations.

    Either an explicit list, a named family (betweenness / cyclic seating)
    or every relation satisfying a property spec.  Spec classes are only
    materialised on demand; otherwise questions go to a SAT oracle.
    """

    def __init__(self, domain: Domain, k: int, name: str, *, masks=None,
                 spec: PropertySpec | None = None, family: str | None = None,
                 budget: int = DEFAULT_BUDGET):
        self.domain = domain
        self.k = k
        self.name = name
        self.spec = spec
        self.family = family
        self.budget = budget
        self._masks = None if masks is None else np.unique(np.asarray(masks, dtype=np.uint64))
        self._member_set = None
        self._local: dict = {}
        self._restricted: dict = {}
        if self._masks is not None and not self._masks.size:
            raise RuleError("model class is empty")

    @classmethod
    def explicit(cls, models: Sequence[KRelation], name: str = "explicit") -> "ModelClass":
        models = list(models)
        if not models:
            raise RuleError("model class is empty")
        d, k = models[0].domain, models[0].k
        if any(R.domain != d or R.k != k for R in models):
            raise RuleError("models disagree on domain or arity")
        return cls(d, k, name, masks=[R.bits for R in models])

    @classmethod
    def betweenness(cls, domain: Domain) -> "ModelClass":
        return cls(domain, 3, "betweenness", masks=[R.bits for R in all_betweenness(domain)],
                   family="betweenness")

    @classmethod
    def cyclic(cls, domain: Domain, k: int) -> "ModelClass":
        return cls(domain, k, f"cyclic-{k}", masks=[R.bits for R in all_cyclic(domain, k)],
                   family="cyclic")

    @classmethod
    def of_spec(cls, domain: Domain, k: int, spec: PropertySpec,
                budget: int = DEFAULT_BUDGET, materialize: bool = False) -> "ModelClass":
        mc = cls(domain, k, spec.name, spec=spec, budget=budget)
        if materialize or (tuple_count(domain.n, k) <= 63
                           and 1 << tuple_count(domain.n, k) <= _EAGER_SCAN):
            mc.masks()
        return mc

    @property
    def T(self) -> int:
        return tuple_count(self.domain.n, self.k)

    @property
    def materialized(self) -> bool:
        return self._masks is not None

    def masks(self) -> np.ndarray:
        if self._masks is None:
            masks = model_masks(self.domain, self.k, self.spec, self.budget)
            if not masks.size:
                raise RuleError(f"no relation satisfies {self.spec.name}")
            self._masks = masks
        return self._masks

    def models(self) -> list:
        return [KRelation(self.domain, self.k, bits=int(m)) for m in self.masks()]

    def __len__(self) -> int:
        return int(self.masks().size)

    def __contains__(self, R: KRelation) -> bool:
        if R.domain != self.domain or R.k != self.k:
            return False
        if self._masks is None:
            return self.spec.holds(R)
        if self._member_set is None:
            self._member_set = set(int(m) for m in self._masks)
        return R.bits in self._member_set

    @property
    def clausal(self) -> bool:
        """Membership is exactly a clause set (the class is a spec class)."""
        return self.spec is not None and self.spec.clausal

    def oracle(self):
        """A fresh oracle answering find(required, forbidden) over the class."""
        if self.materialized:
            from .sat import EnumOracle
            return EnumOracle(self._masks)
        if not self.clausal:
            from .sat import EnumOracle
            return EnumOracle(self.masks())
        return SatOracle(self.T, self.spec.clauses(self.domain, self.k))

    def find(self, required: int = 0, forbidden: int = 0) -> int | None:
        with self.oracle() as o:
            return o.find(required, forbidden)

    def local_patterns(self, indices: Sequence[int]) -> dict:
        """Map each realisable local pattern on ``indices`` to an example model.

        A local pattern is a mask whose bit ``p`` says whether tuple
        ``indices[p]`` is present.  Results are cached per index tuple.
        """
        indices = tuple(indices)
        if indices in self._local:
            return self._local[indices]
        out = {}
        if self.materialized or not self.clausal:
            x = self.masks()
            key = np.zeros(x.size, dtype=np.int64)
            for p, t in enumerate(indices):
                key |= ((x >> np.uint64(t)) & np.uint64(1)).astype(np.int64) << p
            uniq, first = np.unique(key, return_index=True)
            out = {int(u): int(x[f]) for u, f in zip(uniq, first)}
        else:
            with self.oracle() as o:
                for local in range(1 << len(indices)):
                    req = forb = 0
                    for p, t in enumerate(indices):
                        if local >> p & 1:
                            req |= 1 << t
                        else:
                            forb |= 1 << t
                    found = o.find(req, forb)
                    if found is not None:
                        out[local] = found
        self._local[indices] = out
        return out

    def on(self, sub: Domain) -> "ModelClass":
        """The class of ballots over a subdomain (regenerated, not restricted,
        for families and spec classes)."""
        if sub == self.domain:
            return self
        if self.family == "betweenness":
            return ModelClass.betweenness(sub)
        if self.family == "cyclic":
            return ModelClass.cyclic(sub, self.k)
        if self.spec is not None:
            return ModelClass.of_spec(sub, self.k, self.spec, self.budget)
        image = {restrict(R, sub.elements) for R in self.models()}
        return ModelClass.explicit(sorted(image, key=lambda R: R.bits), f"{self.name}|{sub.n}")

    def restricted_to(self, spec: PropertySpec) -> "ModelClass":
        """Members of this class that also satisfy ``spec``."""
        if spec in self._restricted:
            return self._restricted[spec]
        if self.spec is not None and set(spec.atoms) <= set(self.spec.atoms) and not spec.hooks:
            out = self
        elif self.spec is not None and not self.materialized:
            out = ModelClass.of_spec(self.domain, self.k, self.spec & spec, self.budget)
        else:
            keep = [R for R in self.models() if spec.holds(R)]
            if not keep:
                raise RuleError(f"no member of {self.name} satisfies {spec.name}")
            out = ModelClass.explicit(keep, f"{self.name}&{spec.name}")
        self._restricted[spec] = out
        return out

    def prime_restriction(self, spec: PropertySpec, cls: "ModelClass") -> None:
        """Use ``cls`` (e.g. an eagerly enumerated spec class) for restricted_to(spec)."""
        if cls.domain != self.domain or cls.k != self.k:
            raise RuleError("primed class disagrees on domain or arity")
        self._restricted[spec] = cls

    def __repr__(self) -> str:
        size = f"{len(self)} models" if self.materialized else "lazy"
        return f"ModelClass({self.name}, n={self.domain.n}, k={self.k}, {size})"


# -- profile domains ------------------------------------------------------------

class ProfileDomain:
    voters: VoterSet
    domain: Domain
    k: int
    is_product = False

    def __iter__(self) -> Iterator[Profile]:
        raise NotImplementedError

    def size(self) -> int:
        raise NotImplementedError

    def enumerable(self, limit: int = ENUMERATION_LIMIT) -> bool:
        try:
            return self.size() <= limit
        except BudgetExceeded:
            return False


class ProductDomain(ProfileDomain):
    """Every voter independently casts any ballot of ``model_class``."""

    is_product = True

    def __init__(self, model_class: ModelClass, voters: VoterSet):
        self.model_class = model_class
        self.voters = voters
        self.domain = model_class.domain
        self.k = model_class.k

    def size(self) -> int:
        return len(self.model_class) ** self.voters.m

    def __iter__(self) -> Iterator[Profile]:
        models = self.model_class.models()
        for combo in product(models, repeat=self.voters.m):
            yield Profile(self.voters, combo)

    def profile_of(self, masks: Sequence[int]) -> Profile:
        return Profile(self.voters, tuple(KRelation(self.domain, self.k, bits=int(b)) for b in masks))

    def __repr__(self) -> str:
        return f"ProductDomain({self.model_class.name}^{self.voters.m})"


class ExplicitDomain(ProfileDomain):
    """A finite list of profiles."""

    def __init__(self, profiles: Iterable[Profile]):
        profiles = tuple(dict.fromkeys(profiles))
        if not profiles:
            raise RuleError("profile domain must be nonempty")
        first = profiles[0]
        for p in profiles:
            if p.voters != first.voters or p.domain != first.domain or p.k != first.k:
                raise RuleError("profiles disagree on voters, domain or arity")
        self.profiles = profiles
        self.voters = first.voters
        self.domain = first.domain
        self.k = first.k

    def size(self) -> int:
        return len(self.profiles)

    def __iter__(self) -> Iterator[Profile]:
        return iter(self.profiles)

    def __repr__(self) -> str:
        return f"ExplicitDomain({len(self.profiles)} profiles)"


# -- rules ------------------------------------------------------------------------

class AggregationRule:
    """Base class.  Coalition-determined rules implement ``wins``."""

    coalitional = False
    name = "rule"

    def wins(self, t: tuple, coalition: frozenset) -> bool:
        raise NotImplementedError

    def evaluate(self, profile: Profile) -> KRelation:
        return evaluate(self, profile)

    def to_dict(self) -> dict:
        raise RuleError(f"{self.name} has no JSON form")


@dataclass(frozen=True)
class Dictatorship(AggregationRule):
    voter: str
    coalitional = True

    @property
    def name(self) -> str:
        return f"dictatorship({self.voter})"

    def wins(self, t, coalition):
        return self.voter in coalition

    def to_dict(self):
        return {"kind": "dictatorship", "voter": self.voter}


@dataclass(frozen=True)
class Oligarchy(AggregationRule):
    coalition: frozenset
    coalitional = True

    def __post_init__(self):
        object.__setattr__(self, "coalition", frozenset(str(v) for v in self.coalition))
        if not self.coalition:
            raise RuleError("an oligarchy needs a nonempty coalition")

    @property
    def name(self) -> str:
        return "oligarchy({" + ",".join(sorted(self.coalition)) + "})"

    def wins(self, t, coalition):
        return self.coalition <= coalition

    def to_dict(self):
        return {"kind": "oligarchy", "coalition": sorted(self.coalition)}


@dataclass(frozen=True)
class QuotaRule(AggregationRule):
    """Include a tuple iff at least ``q`` voters hold it."""

    q: int
    coalitional = True

    @property
    def name(self) -> str:
        return f"quota({self.q})"

    def wins(self, t, coalition):
        return len(coalition) >= self.q

    def to_dict(self):
        return {"kind": "quota", "q": self.q}


@dataclass(frozen=True)
class CoalitionRule(AggregationRule):
    """Include a tuple iff its supporters form a winning coalition.

    ``family`` applies to every tuple not listed in ``per_tuple``.
    """

    family: object
    per_tuple: tuple = ()
    coalitional = True

    def __post_init__(self):
        object.__setattr__(self, "per_tuple", tuple((tuple(t), f) for t, f in self.per_tuple))
        object.__setattr__(self, "_table", dict(self.per_tuple))

    @property
    def name(self) -> str:
        base = f"coalition({self.family.label()})"
        return base + (f"+{len(self.per_tuple)} overrides" if self.per_tuple else "")

    def family_for(self, t: tuple):
        return self._table.get(tuple(t), self.family)

    def wins(self, t, coalition):
        return coalition in self.family_for(t)

    def to_dict(self):
        out = {"kind": "coalition", "family": self.family.to_dict()}
        if self.per_tuple:
            out["per_tuple"] = [{"tuple": list(t), "family": f.to_dict()} for t, f in self.per_tuple]
        return out


@dataclass(frozen=True, eq=False)
class ExplicitTable(AggregationRule):
    """A rule given by its graph on a finite set of profiles."""

    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        object.__setattr__(self, "_lookup", dict(self.table))

    name = "table"

    def evaluate(self, profile):
        try:
            return self._lookup[profile]
        except KeyError:
            raise RuleError("profile outside the rule's table") from None

    def to_dict(self):
        return {"kind": "table",
                "entries": [{"profile": p.to_dict(), "relation": R.to_dict()} for p, R in self.table]}


@dataclass(frozen=True, eq=False)
class FunctionRule(AggregationRule):
    """Wrap an arbitrary callable ``profile -> KRelation``."""

    fn: Callable
    label: str = "function"

    @property
    def name(self) -> str:
        return self.label

    def evaluate(self, profile):
        return self.fn(profile)


@lru_cache(maxsize=4096)
def win_table(rule: AggregationRule, voters: VoterSet, domain: Domain, k: int) -> tuple:
    """Per canonical tuple index, an int bitset over coalition masks."""
    if not rule.coalitional:
        raise RuleError(f"{rule.name} is not coalition-determined")
    coalitions = [voters.coalition(mask) for mask in range(1 << voters.m)]
    if isinstance(rule, Dictatorship):
        voters.index(rule.voter)
    if isinstance(rule, Oligarchy):
        voters.mask(rule.coalition)
    out = []
    for t in injective_tuples(domain, k):
        bits = 0
        for mask, c in enumerate(coalitions):
            if rule.wins(t, c):
                bits |= 1 << mask
        out.append(bits)
    return tuple(out)


def evaluate(rule: AggregationRule, profile: Profile) -> KRelation:
    """Apply a rule to a profile."""
    if type(rule).evaluate is not AggregationRule.evaluate:
        return rule.evaluate(profile)
    table = win_table(rule, profile.voters, profile.domain, profile.k)
    bits = 0
    for t, (winners, sup) in enumerate(zip(table, profile.support)):
        if winners >> sup & 1:
            bits |= 1 << t
    return KRelation(profile.domain, profile.k, bits=bits)


def rule_from_dict(data: dict) -> AggregationRule:
    from .coalitions import CoalitionFamily
    kind = data.get("kind")
    if kind == "dictatorship":
        return Dictatorship(str(data["voter"]))
    if kind == "oligarchy":
        return Oligarchy(frozenset(data["coalition"]))
    if kind == "quota":
        return QuotaRule(int(data["q"]))
    if kind == "coalition":
        fam = CoalitionFamily.from_dict(data["family"])
        per = [(tuple(e["tuple"]), CoalitionFamily.from_dict(e["family"]))
               for e in data.get("per_tuple", [])]
        return CoalitionRule(fam, tuple(per))
    if kind == "table":
        return ExplicitTable(tuple((Profile.from_dict(e["profile"]), KRelation.from_dict(e["relation"]))
                                   for e in data["entries"]))
    raise RuleError(f"unknown rule kind {kind!r}")


# -- pattern engine helpers ------------------------------------------------------

def _use_pattern(rule: AggregationRule, D: ProfileDomain, engine: str) -> bool:
    if engine == "enumerate":
        return False
    applicable = D.is_product and rule.coalitional
    if engine == "pattern" and not applicable:
        raise RuleError("pattern engine needs a product domain and a coalition-determined rule")
    return applicable


def _enumerable(D: ProfileDomain) -> None:
    if not D.enumerable():
        raise BudgetExceeded(f"{D!r} is too large to enumerate profile by profile")


def realizable_supports(D: ProductDomain, t: int) -> list:
    """Supporter masks that occur for tuple index ``t`` across D."""
    local = D.model_class.local_patterns((t,))
    has, lacks = 1 in local, 0 in local
    if has and lacks:
        return list(range(1 << D.voters.m))
    return [D.voters.full_mask] if has else [0]


def _uniform_profile(D: ProductDomain, model_mask: int) -> Profile:
    return D.profile_of([model_mask] * D.voters.m)


def _support_profile(D: ProductDomain, t: int, support: int) -> Profile:
    local = D.model_class.local_patterns((t,))
    return D.profile_of([local[1] if support >> i & 1 else local[0] for i in range(D.voters.m)])


# -- axiom checkers --------------------------------------------------------------

def check_P(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> Check:
    """Unanimity: tuples held by every voter are in the output.

    Witness: ``(profile, tuple)``.
    """
    space = injective_tuples(D.domain, D.k)
    if _use_pattern(rule, D, engine):
        table = win_table(rule, D.voters, D.domain, D.k)
        full = D.voters.full_mask
        for t, winners in enumerate(table):
            if winners >> full & 1:
                continue
            local = D.model_class.local_patterns((t,))
            if 1 in local:
                return Check(False, (_uniform_profile(D, local[1]), space[t]))
        return Check(True)
    _enumerable(D)
    for p in D:
        out = evaluate(rule, p)
        common = ~0
        for R in p.relations:
            common &= R.bits
        missing = common & ~out.bits
        if missing:
            return Check(False, (p, space[bit_indices(missing)[0]]))
    return Check(True)


def check_groundedness(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> Check:
    """Every output tuple is held by at least one voter.  Witness: ``(profile, tuple)``."""
    space = injective_tuples(D.domain, D.k)
    if _use_pattern(rule, D, engine):
        table = win_table(rule, D.voters, D.domain, D.k)
        for t, winners in enumerate(table):
            if not winners & 1:
                continue
            local = D.model_class.local_patterns((t,))
            if 0 in local:
                return Check(False, (_uniform_profile(D, local[0]), space[t]))
        return Check(True)
    _enumerable(D)
    for p in D:
        out = evaluate(rule, p)
        anyone = 0
        for R in p.relations:
            anyone |= R.bits
        extra = out.bits & ~anyone
        if extra:
            return Check(False, (p, space[bit_indices(extra)[0]]))
    return Check(True)


def check_IIA(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> Check:
    """Output membership of a tuple depends only on who holds it.

    Witness: ``(p, q, tuple)`` with equal supporters but different outputs.
    Coalition-determined rules satisfy this by construction on any domain;
    the enumerate engine re-derives it from the outputs.
    """
    if rule.coalitional and engine != "enumerate":
        return Check(True)
    _enumerable(D)
    space = injective_tuples(D.domain, D.k)
    seen: dict = {}
    for p in D:
        out = evaluate(rule, p).bits
        for t, sup in enumerate(p.support):
            key = (t, sup)
            got = bool(out >> t & 1)
            if key not in seen:
                seen[key] = (got, p)
            elif seen[key][0] != got:
                return Check(False, (seen[key][1], p, space[t]))
    return Check(True)


check_IIE = check_IIA


def check_D(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> str | None:
    """The least voter whose relation the output always reproduces, or None."""
    if _use_pattern(rule, D, engine):
        table = win_table(rule, D.voters, D.domain, D.k)
        supports = [realizable_supports(D, t) for t in range(len(table))]
        for i, voter in enumerate(D.voters.ids):
            if all(bool(table[t] >> s & 1) == bool(s >> i & 1)
                   for t in range(len(table)) for s in supports[t]):
                return voter
        return None
    _enumerable(D)
    alive = list(range(D.voters.m))
    for p in D:
        out = evaluate(rule, p)
        alive = [i for i in alive if p.relations[i] == out]
        if not alive:
            return None
    return D.voters.ids[alive[0]]


def check_UD(D: ProfileDomain) -> Check:
    """Every profile of ballots over any (k+1)-subset extends to a profile in D.

    Ballots over a subset ``B`` come from the ballot class regenerated on
    ``B`` (product domains) or, for explicit domains, from the restriction
    image of the ballots used anywhere in D.  Witness: ``(B, restricted
    profile as tuple of relations)``.  See ``UD_NOTE``.
    """
    k = D.k
    if D.domain.n < k + 1:
        raise RuleError(f"UD needs at least k+1={k + 1} elements")
    if D.is_product:
        mc = D.model_class
        for B in combinations(D.domain.elements, k + 1):
            sub = D.domain.subdomain(B)
            if sub == D.domain:
                continue
            target = mc.on(sub)
            image = {restrict(R, B).bits for R in mc.models()}
            for R in target.models():
                if R.bits not in image:
                    return Check(False, (B, (R,) * D.voters.m))
        return Check(True)
    _enumerable(D)
    ballots = {R for p in D for R in p.relations}
    mc = ModelClass.explicit(sorted(ballots, key=lambda R: R.bits))
    for B in combinations(D.domain.elements, k + 1):
        sub = D.domain.subdomain(B)
        target = mc.on(sub).models()
        seen = {tuple(restrict(R, B).bits for R in p.relations) for p in D}
        for combo in product(target, repeat=D.voters.m):
            if tuple(R.bits for R in combo) not in seen:
                return Check(False, (B, combo))
    return Check(True)


def _combo_columns(E: list, m: int, width: int):
    """All voter-wise choices of local rows and the resulting column masks."""
    rows = np.array(E, dtype=np.int64)
    grids = np.indices((len(E),) * m).reshape(m, -1).T  # voter 1 varies slowest
    cols = np.zeros((grids.shape[0], width), dtype=np.int64)
    for i in range(m):
        chosen = rows[grids[:, i]]
        for x in range(width):
            cols[:, x] |= ((chosen >> x) & 1) << i
    return grids, cols


def _clause_violation(rule, D: ProductDomain, ballots: ModelClass, premise: int,
                      conclusion: int):
    """First profile (as per-voter model masks) whose output violates the clause."""
    X = bit_indices(premise | conclusion)
    local = ballots.local_patterns(tuple(X))
    if not local:
        return None
    E = sorted(local)
    table = win_table(rule, D.voters, D.domain, D.k)
    m = D.voters.m
    cache = ballots._local.setdefault(("combo", tuple(X), m), None)
    if cache is None:
        cache = _combo_columns(E, m, len(X))
        ballots._local[("combo", tuple(X), m)] = cache
    grids, cols = cache
    ok = np.ones(grids.shape[0], dtype=bool)
    for x, t in enumerate(X):
        wins = np.array([table[t] >> s & 1 for s in range(1 << m)], dtype=bool)
        col = wins[cols[:, x]]
        ok &= col if premise >> t & 1 else ~col
        if not ok.any():
            return None
    row = int(np.flatnonzero(ok)[0])
    return [local[E[g]] for g in grids[row]]


def check_collective_rationality(rule: AggregationRule, D: ProfileDomain, spec: PropertySpec,
                                 engine: str = "auto") -> Check:
    """Output satisfies ``spec`` whenever every ballot does.

    Witness: ``(profile, failing atom and its witness)``.
    """
    if _use_pattern(rule, D, engine) and spec.clausal and (
            D.model_class.clausal or D.model_class.materialized):
        try:
            ballots = D.model_class.restricted_to(spec)
            if not ballots.materialized and ballots.find() is None:
                raise RuleError("empty")
        except RuleError:
            return Check(True)  # no ballot satisfies spec: vacuous
        for premise, conclusion in spec.clauses(D.domain, D.k):
            hit = _clause_violation(rule, D, ballots, premise, conclusion)
            if hit is not None:
                p = D.profile_of(hit)
                return Check(False, (p, spec.check(evaluate(rule, p)).witness))
        return Check(True)
    _enumerable(D)
    verdicts: dict = {}
    for p in D:
        if not all(_cached_holds(spec, R, verdicts) for R in p.relations):
            continue
        out = evaluate(rule, p)
        if not _cached_holds(spec, out, verdicts):
            return Check(False, (p, spec.check(out).witness))
    return Check(True)


def _cached_holds(spec, R, cache) -> bool:
    if R not in cache:
        cache[R] = spec.holds(R)
    return cache[R]


def check_closure(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> Check:
    """Every output is itself a ballot of the domain's model class.

    Witness: ``(profile, output)``.
    """
    mc = D.model_class if D.is_product else None
    if mc is not None and mc.clausal and _use_pattern(rule, D, engine):
        result = check_collective_rationality(rule, D, mc.spec, engine)
        if result:
            return result
        p = result.witness[0]
        return Check(False, (p, evaluate(rule, p)))
    if mc is not None and rule.coalitional and engine != "enumerate":
        return _vector_closure(rule, D)
    _enumerable(D)
    ballots = mc if mc is not None else {R for p in D for R in p.relations}
    for p in D:
        out = evaluate(rule, p)
        if out not in ballots:
            return Check(False, (p, out))
    return Check(True)


def _vector_closure(rule: AggregationRule, D: ProductDomain) -> Check:
    """Closure over an explicit product domain, all profiles at once."""
    _enumerable(D)
    masks = D.model_class.masks()
    T, m = D.model_class.T, D.voters.m
    bitmat = ((masks[:, None] >> np.arange(T, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)
    grids = np.indices((masks.size,) * m).reshape(m, -1).T
    pats = np.zeros((grids.shape[0], T), dtype=np.int64)
    for i in range(m):
        pats |= bitmat[grids[:, i]] << i
    table = win_table(rule, D.voters, D.domain, D.k)
    wins = np.array([[w >> s & 1 for s in range(1 << m)] for w in table], dtype=np.uint64)
    out = np.zeros(grids.shape[0], dtype=np.uint64)
    for t in range(T):
        out |= wins[t][pats[:, t]] << np.uint64(t)
    bad = np.flatnonzero(~np.isin(out, masks))
    if not bad.size:
        return Check(True)
    row = int(bad[0])
    p = D.profile_of([int(masks[g]) for g in grids[row]])
    return Check(False, (p, KRelation(D.domain, D.k, bits=int(out[row]))))


def check_neutral(rule: AggregationRule, D: ProfileDomain, engine: str = "auto") -> Check:
    """All tuples share one family of winning coalitions.

    On success the witness is that common family; on failure it is
    ``(t1, W1, t2, W2)`` or the not-coalition-determined outcome.
    """
    from .coalitions import NotCoalitionDetermined, winning_coalitions
    first = None
    for t in injective_tuples(D.domain, D.k):
        W = winning_coalitions(rule, D, t, engine)
        if isinstance(W, NotCoalitionDetermined):
            return Check(False, W)
        if first is None:
            first = (t, W)
        elif W != first[1]:
            return Check(False, (first[0], first[1], t, W))
    return Check(True, first[1])


def rules_agree(r1: AggregationRule, r2: AggregationRule, D: ProfileDomain,
                engine: str = "auto") -> Check:
    """Both rules produce the same output on every profile.  Witness: a profile."""
    if _use_pattern(r1, D, engine) and r2.coalitional:
        t1 = win_table(r1, D.voters, D.domain, D.k)
        t2 = win_table(r2, D.voters, D.domain, D.k)
        for t in range(len(t1)):
            for s in realizable_supports(D, t):
                if (t1[t] >> s & 1) != (t2[t] >> s & 1):
                    return Check(False, _support_profile(D, t, s))
        return Check(True)
    _enumerable(D)
    for p in D:
        if evaluate(r1, p) != evaluate(r2, p):
            return Check(False, p)
    return Check(True)
