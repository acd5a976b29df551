"""Relation properties, example families and exhaustive model enumeration."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .core import (BudgetExceeded, Domain, KRelation, RelationError, apply_permutation,
                   delta_subsequences, injective_tuples, is_injective, tuple_count,
                   tuple_index)

DEFAULT_BUDGET = 1 << 26

ATOMS = ("connected", "exclusive", "simplicial-transitive", "path-transitive", "trivial")


class Check(NamedTuple):
    """Verdict of a checker plus the first counterexample found (if any)."""

    ok: bool
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def _require_arity(R: KRelation, minimum: int) -> None:
    if R.domain.n < minimum:
        raise RelationError(f"need at least {minimum} elements, domain has {R.domain.n}")


def _identity_and_perms(k: int) -> list:
    return [tuple(p) for p in permutations(range(1, k + 1))]


def is_connected(R: KRelation) -> Check:
    """Every k-set of distinct elements has some arrangement in ``R``.

    Witness on failure: the k-set (in domain order) with no arrangement.
    """
    _require_arity(R, R.k)
    perms = _identity_and_perms(R.k)
    for kset in combinations(R.domain.elements, R.k):
        if not any(apply_permutation(kset, tau) in R for tau in perms):
            return Check(False, kset)
    return Check(True)


def is_exclusive(R: KRelation) -> Check:
    """No k-set of distinct elements has all k! arrangements in ``R``.

    The quantifier is read as ranging over every pairwise-distinct k-set.
    """
    _require_arity(R, R.k)
    perms = _identity_and_perms(R.k)
    for kset in combinations(R.domain.elements, R.k):
        if all(apply_permutation(kset, tau) in R for tau in perms):
            return Check(False, kset)
    return Check(True)


@lru_cache(maxsize=None)
def _simplicial_instances(domain: Domain, k: int) -> tuple:
    out = []
    for s in permutations(domain.elements, k + 1):
        for j in range(1, k + 2):
            premise = tuple(delta_subsequences(s, 1, required={j}))
            (conclusion,) = delta_subsequences(s, 1, forbidden={j})
            out.append((s, j, premise, conclusion))
    return tuple(out)


def is_simplicial_transitive(R: KRelation) -> Check:
    """For each injective (k+1)-sequence and position j: if every length-k
    subsequence through j is in ``R`` then so is the one omitting j.

    Vacuously true when the domain has exactly k elements.  Witness on
    failure: ``(sequence, j)``.
    """
    _require_arity(R, R.k)
    for s, j, premise, conclusion in _simplicial_instances(R.domain, R.k):
        if conclusion not in R and all(t in R for t in premise):
            return Check(False, (s, j))
    return Check(True)


def path_consequences(a: Sequence, b: Sequence, i: int, j: int) -> list:
    """Injective length-k subsequences forced by the overlap ``a[i] == b[j]``.

    Positions are 1-based with ``i > j``.  The concatenation
    ``(a_1..a_{i-1}, b_{j+1}..b_k)`` can repeat labels; its non-injective
    subsequences are skipped since relations never contain them.
    """
    k = len(a)
    joined = tuple(a[: i - 1]) + tuple(b[j:])
    return [t for t in delta_subsequences(joined, i - j - 1) if is_injective(t)]


def is_path_transitive(R: KRelation) -> Check:
    """Overlapping members force every subsequence of their concatenation.

    Every overlap pair ``(i, j)`` with ``a_i == b_j`` and ``i > j`` is used.
    Witness on failure: ``(a, b, i, j, missing_tuple)``.
    """
    _require_arity(R, R.k)
    members = R.tuples
    k = R.k
    for a in members:
        for b in members:
            for i in range(2, k + 1):
                for j in range(1, i):
                    if a[i - 1] != b[j - 1]:
                        continue
                    for t in path_consequences(a, b, i, j):
                        if t not in R:
                            return Check(False, (a, b, i, j, t))
    return Check(True)


def is_trivial(R: KRelation) -> Check:
    return Check(True)


CHECKERS = {
    "connected": is_connected,
    "exclusive": is_exclusive,
    "simplicial-transitive": is_simplicial_transitive,
    "path-transitive": is_path_transitive,
    "trivial": is_trivial,
}


@dataclass(frozen=True)
class PropertySpec:
    """Conjunction of named property atoms and optional predicate hooks."""

    atoms: tuple = ()
    hooks: tuple = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        unknown = [a for a in atoms if a not in ATOMS]
        if unknown:
            raise ValueError(f"unknown property atoms {unknown}; known: {list(ATOMS)}")
        if not atoms and not self.hooks:
            raise ValueError("a property spec needs at least one atom or hook")
        canonical = tuple(a for a in ATOMS if a in atoms)
        object.__setattr__(self, "atoms", canonical)
        object.__setattr__(self, "hooks", tuple(self.hooks))

    @classmethod
    def parse(cls, text: str) -> "PropertySpec":
        """Parse ``"connected,exclusive"`` or a JSON array of atom names."""
        text = text.strip()
        if text.startswith("["):
            return cls.from_json(text)
        return cls(tuple(a.strip() for a in text.split(",") if a.strip()))

    @classmethod
    def from_json(cls, text: str) -> "PropertySpec":
        names = json.loads(text)
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ValueError("property spec JSON must be an array of atom names")
        return cls(tuple(names))

    def to_json(self) -> str:
        return json.dumps(list(self.atoms))

    @property
    def name(self) -> str:
        label = "+".join(self.atoms)
        if self.hooks:
            label += ("+" if label else "") + f"{len(self.hooks)}hook"
        return label

    @property
    def clausal(self) -> bool:
        return not self.hooks

    def __and__(self, other: "PropertySpec") -> "PropertySpec":
        return PropertySpec(self.atoms + other.atoms, self.hooks + other.hooks)

    def check(self, R: KRelation) -> Check:
        for atom in self.atoms:
            result = CHECKERS[atom](R)
            if not result:
                return Check(False, (atom, result.witness))
        for hook in self.hooks:
            if not hook(R):
                return Check(False, (getattr(hook, "__name__", "hook"), None))
        return Check(True)

    def holds(self, R: KRelation) -> bool:
        return self.check(R).ok

    def clauses(self, domain: Domain, k: int) -> tuple:
        if self.hooks:
            raise ValueError("predicate hooks have no clause form")
        return spec_clauses(self.atoms, domain, k)


TRIVIAL = PropertySpec(("trivial",))


# -- generators ---------------------------------------------------------------

def _order_domain(order: Sequence[str], domain: Domain | None) -> Domain:
    if domain is None:
        domain = Domain(sorted(order))
    if sorted(order) != sorted(domain.elements) or len(set(order)) != len(order):
        raise RelationError(f"{list(order)!r} is not an arrangement of {list(domain.elements)!r}")
    return domain


def betweenness_from_order(order: Sequence[str], domain: Domain | None = None) -> KRelation:
    """Ternary relation of triples whose middle entry lies strictly between
    the outer two in ``order``."""
    domain = _order_domain(order, domain)
    if domain.n < 3:
        raise RelationError("betweenness needs at least 3 elements")
    tuples = []
    for x, y, z in combinations(order, 3):
        tuples.append((x, y, z))
        tuples.append((z, y, x))
    return KRelation(domain, 3, tuples)


def cyclic_seating(cycle: Sequence[str], k: int, domain: Domain | None = None) -> KRelation:
    """For every k-subset, the k rotations of its arrangement induced by
    the cyclic order ``cycle`` (and no other arrangement of it)."""
    domain = _order_domain(cycle, domain)
    if k < 3:
        raise RelationError("cyclic seating needs k >= 3")
    if k > domain.n:
        raise RelationError(f"k={k} exceeds {domain.n} guests")
    tuples = []
    for sub in combinations(cycle, k):
        for r in range(k):
            tuples.append(sub[r:] + sub[:r])
    return KRelation(domain, k, tuples)


def all_betweenness(domain: Domain) -> list:
    """One betweenness relation per total order up to reversal (n!/2)."""
    seen, out = set(), []
    for order in permutations(domain.elements):
        R = betweenness_from_order(order, domain)
        if R not in seen:
            seen.add(R)
            out.append(R)
    return sorted(out, key=lambda R: R.bits)


def all_cyclic(domain: Domain, k: int) -> list:
    """One cyclic-seating relation per cyclic arrangement of the domain."""
    seen, out = set(), []
    first, rest = domain.elements[0], domain.elements[1:]
    for tail in permutations(rest):
        R = cyclic_seating((first,) + tail, k, domain)
        if R not in seen:
            seen.add(R)
            out.append(R)
    return sorted(out, key=lambda R: R.bits)


# -- clause form ---------------------------------------------------------------
#
# A clause (premise, conclusion) over canonical tuple indices reads
# "R contains every premise tuple  =>  R meets the conclusion set";
# an empty conclusion forbids the premise outright.

def _connected_clauses(domain: Domain, k: int) -> list:
    index = tuple_index(domain, k)
    out = []
    for kset in combinations(range(domain.n), k):
        mask = 0
        for arr in permutations(kset):
            mask |= 1 << index[tuple(domain.elements[i] for i in arr)]
        out.append((0, mask))
    return out


def _exclusive_clauses(domain: Domain, k: int) -> list:
    return [(c, 0) for _, c in _connected_clauses(domain, k)]


def _simplicial_clauses(domain: Domain, k: int) -> list:
    index = tuple_index(domain, k)
    el = domain.elements
    out = []
    for s in permutations(el, k + 1):
        drops = [index[s[:d] + s[d + 1:]] for d in range(k + 1)]
        for j in range(k + 1):
            premise = 0
            for d in range(k + 1):
                if d != j:
                    premise |= 1 << drops[d]
            out.append((premise, 1 << drops[j]))
    return out


def _path_clauses(domain: Domain, k: int) -> list:
    index = tuple_index(domain, k)
    space = injective_tuples(domain, k)
    by_entry = {}
    for t in space:
        for pos, x in enumerate(t):
            by_entry.setdefault(x, []).append((t, pos))
    out = set()
    for a in space:
        ia = index[a]
        for i0, x in enumerate(a):
            for b, j0 in by_entry[x]:
                if j0 >= i0:
                    continue
                joined = a[:i0] + b[j0 + 1:]
                ib = index[b]
                for keep in combinations(range(len(joined)), k):
                    t = tuple(joined[p] for p in keep)
                    if len(set(t)) < k:
                        continue
                    it = index[t]
                    if it in (ia, ib):
                        continue
                    out.add(((1 << ia) | (1 << ib), 1 << it))
    return sorted(out)


_CLAUSE_BUILDERS = {
    "connected": _connected_clauses,
    "exclusive": _exclusive_clauses,
    "simplicial-transitive": _simplicial_clauses,
    "path-transitive": _path_clauses,
    "trivial": lambda domain, k: [],
}


@lru_cache(maxsize=None)
def spec_clauses(atoms: tuple, domain: Domain, k: int) -> tuple:
    """Deduplicated clause list for a conjunction of atoms (cached)."""
    seen, out = set(), []
    for atom in atoms:
        for clause in _CLAUSE_BUILDERS[atom](domain, k):
            if clause not in seen:
                seen.add(clause)
                out.append(clause)
    return tuple(out)


def clauses_hold(bits: int, clauses: Iterable) -> bool:
    for premise, conclusion in clauses:
        if bits & premise == premise and not bits & conclusion:
            return False
    return True


# -- enumeration --------------------------------------------------------------

_CHUNK = 1 << 20


def _scan_chunk(args) -> np.ndarray:
    start, stop, clauses = args
    x = np.arange(start, stop, dtype=np.uint64)
    for premise, conclusion in clauses:
        p = np.uint64(premise)
        keep = (x & p) != p
        if conclusion:
            keep |= (x & np.uint64(conclusion)) != 0
        x = x[keep]
        if not x.size:
            break
    return x


def _check_budget(domain: Domain, k: int, budget: int) -> int:
    T = tuple_count(domain.n, k)
    if T > 63 or (1 << T) > budget:
        raise BudgetExceeded(
            f"2^{T} candidate relations over n={domain.n}, k={k} exceed budget {budget}")
    return T


def model_masks(domain: Domain, k: int, spec: PropertySpec, budget: int = DEFAULT_BUDGET,
                extra_clauses: Sequence = (), workers: int = 1) -> np.ndarray:
    """Bitmasks of all relations satisfying ``spec`` (ascending order)."""
    T = _check_budget(domain, k, budget)
    clauses = list(extra_clauses) + list(spec_clauses(spec.atoms, domain, k))
    # unit clauses first: they prune hardest
    clauses.sort(key=lambda c: (c[0].bit_count() + (c[1].bit_count() if c[1] else 0)))
    total = 1 << T
    jobs = [(s, min(s + _CHUNK, total), clauses) for s in range(0, total, _CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_chunk, jobs))
    else:
        parts = [_scan_chunk(job) for job in jobs]
    masks = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint64)
    if spec.hooks:
        keep = [all(h(KRelation(domain, k, bits=int(m))) for h in spec.hooks) for m in masks]
        masks = masks[np.array(keep, dtype=bool)] if len(masks) else masks
    return masks


def iter_models(domain: Domain, k: int, spec: PropertySpec,
                budget: int = DEFAULT_BUDGET) -> Iterator[KRelation]:
    for m in model_masks(domain, k, spec, budget):
        yield KRelation(domain, k, bits=int(m))


def enumerate_models(domain: Domain, k: int, spec: PropertySpec,
                     budget: int = DEFAULT_BUDGET) -> list:
    """All relations over ``domain`` satisfying ``spec``, in bitmask order."""
    return list(iter_models(domain, k, spec, budget))


def count_models(domain: Domain, k: int, spec: PropertySpec, budget: int = DEFAULT_BUDGET,
                 workers: int = 1) -> int:
    return int(model_masks(domain, k, spec, budget, workers=workers).size)
