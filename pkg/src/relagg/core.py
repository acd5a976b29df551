"""Finite-domain k-ary relations and tuple/sequence combinatorics.

Relations only ever hold injective (pairwise-distinct) tuples.  A relation is
stored as a Python int used as a bitset: bit ``i`` is set iff the ``i``-th
injective tuple (lexicographic by domain position) is a member.
"""

from __future__ import annotations

import json
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Iterator, Sequence

Tuple = tuple  # alias used in annotations for k-tuples of labels


class RelationError(ValueError):
    """Malformed tuple, relation or domain."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed the configured budget."""


class Domain:
    """An ordered, finite set of element labels."""

    __slots__ = ("elements", "_pos")

    def __init__(self, elements: Iterable[str]):
        elements = tuple(elements)
        if not elements:
            raise RelationError("domain must be nonempty")
        if len(set(elements)) != len(elements):
            raise RelationError(f"duplicate labels in domain {elements!r}")
        self.elements = elements
        self._pos = {e: i for i, e in enumerate(elements)}

    @classmethod
    def of_size(cls, n: int) -> "Domain":
        """Domain ``a, b, c, ...`` (falls back to ``x1, x2, ...`` past 26)."""
        if n <= 26:
            return cls("abcdefghijklmnopqrstuvwxyz"[:n])
        return cls(f"x{i}" for i in range(1, n + 1))

    @property
    def n(self) -> int:
        return len(self.elements)

    def index(self, label: str) -> int:
        return self._pos[label]

    def __contains__(self, label) -> bool:
        return label in self._pos

    def __iter__(self) -> Iterator[str]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, Domain) and self.elements == other.elements

    def __hash__(self) -> int:
        return hash(self.elements)

    def __repr__(self) -> str:
        return f"Domain({list(self.elements)!r})"

    def subdomain(self, labels: Iterable[str]) -> "Domain":
        """Subset of this domain, keeping the ambient order."""
        labels = set(labels)
        unknown = labels - set(self.elements)
        if unknown:
            raise RelationError(f"labels not in domain: {sorted(unknown)}")
        return Domain(e for e in self.elements if e in labels)


@lru_cache(maxsize=None)
def _tuple_space(elements: tuple, k: int):
    space = tuple(permutations(elements, k))
    return space, {t: i for i, t in enumerate(space)}


def injective_tuples(domain: Domain, k: int) -> tuple:
    """All injective k-tuples over ``domain`` in canonical order.

    The position of a tuple in this sequence is its canonical index.
    ``itertools.permutations`` emits lexicographic order by input position,
    which is exactly the canonical order.
    """
    if k < 1:
        raise RelationError(f"arity must be positive, got {k}")
    if k > domain.n:
        raise RelationError(f"no injective {k}-tuples over {domain.n} elements")
    return _tuple_space(domain.elements, k)[0]


def tuple_index(domain: Domain, k: int) -> dict:
    injective_tuples(domain, k)
    return _tuple_space(domain.elements, k)[1]


def tuple_count(n: int, k: int) -> int:
    count = 1
    for i in range(k):
        count *= n - i
    return count


def _check_perm(tau: Sequence[int], k: int) -> None:
    if sorted(tau) != list(range(1, k + 1)):
        raise RelationError(f"{list(tau)!r} is not a permutation of 1..{k}")


def apply_permutation(t: Sequence, tau: Sequence[int]) -> tuple:
    """Return ``(t[tau(1)], ..., t[tau(k)])`` with 1-based ``tau``."""
    if len(t) != len(tau):
        raise RelationError(f"arity mismatch: tuple has {len(t)}, permutation {len(tau)}")
    _check_perm(tau, len(t))
    return tuple(t[i - 1] for i in tau)


def invert_permutation(tau: Sequence[int]) -> tuple:
    _check_perm(tau, len(tau))
    inv = [0] * len(tau)
    for pos, i in enumerate(tau, start=1):
        inv[i - 1] = pos
    return tuple(inv)


def substitute_at(t: Sequence, j: int, b) -> tuple:
    """Replace position ``j`` (1-based) of ``t`` by ``b``.

    Raises if ``b`` already occurs elsewhere in ``t``.
    """
    if not 1 <= j <= len(t):
        raise RelationError(f"position {j} out of range 1..{len(t)}")
    if any(x == b for i, x in enumerate(t, start=1) if i != j):
        raise RelationError(f"substituting {b!r} at {j} breaks injectivity of {tuple(t)!r}")
    out = list(t)
    out[j - 1] = b
    return tuple(out)


def insert_at(t: Sequence, j: int, b) -> tuple:
    """Insert ``b`` so that it lands at position ``j`` (1-based) of the result."""
    if not 1 <= j <= len(t) + 1:
        raise RelationError(f"insertion position {j} out of range 1..{len(t) + 1}")
    return tuple(t[: j - 1]) + (b,) + tuple(t[j - 1:])


def delta_subsequences(s: Sequence, r: int = 1, required: Iterable[int] = (),
                       forbidden: Iterable[int] = ()) -> list:
    """Subsequences of ``s`` of length ``len(s) - r``.

    ``required`` positions must be kept and ``forbidden`` positions dropped
    (both 1-based).  Results are listed in ``itertools.combinations`` order
    of the kept index sets.
    """
    m = len(s)
    required, forbidden = set(required), set(forbidden)
    for p in required | forbidden:
        if not 1 <= p <= m:
            raise RelationError(f"position {p} out of range 1..{m}")
    if required & forbidden:
        raise RelationError(f"positions both required and forbidden: {sorted(required & forbidden)}")
    if not 0 <= r <= m:
        raise RelationError(f"drop count {r} out of range 0..{m}")
    if len(forbidden) > r:
        raise RelationError(f"{len(forbidden)} forbidden positions but only {r} drops")
    if r > m - len(required):
        raise RelationError(f"cannot drop {r} of {m} positions keeping {len(required)}")
    out = []
    for kept in combinations(range(1, m + 1), m - r):
        ks = set(kept)
        if required <= ks and not (forbidden & ks):
            out.append(tuple(s[i - 1] for i in kept))
    return out


def is_injective(t: Sequence) -> bool:
    return len(set(t)) == len(t)


class KRelation:
    """A set of injective k-tuples over a fixed domain (immutable)."""

    __slots__ = ("domain", "k", "bits")

    def __init__(self, domain: Domain, k: int, tuples: Iterable[Sequence] = (), *,
                 bits: int | None = None, strict: bool = True):
        if k < 2:
            raise RelationError(f"arity must be at least 2, got {k}")
        if k > domain.n:
            raise RelationError(f"arity {k} exceeds domain size {domain.n}")
        index = tuple_index(domain, k)
        if bits is None:
            bits = 0
            for t in tuples:
                t = tuple(t)
                if len(t) != k:
                    raise RelationError(f"tuple {t!r} does not have arity {k}")
                bad = [x for x in t if x not in domain]
                if bad:
                    raise RelationError(f"labels {bad!r} of {t!r} not in domain")
                if not is_injective(t):
                    raise RelationError(f"tuple {t!r} has repeated entries")
                bit = 1 << index[t]
                if strict and bits & bit:
                    raise RelationError(f"duplicate tuple {t!r}")
                bits |= bit
        elif bits < 0 or bits >> len(index):
            raise RelationError("bitset out of range for tuple space")
        self.domain = domain
        self.k = k
        self.bits = int(bits)

    @classmethod
    def empty(cls, domain: Domain, k: int) -> "KRelation":
        return cls(domain, k, bits=0)

    @classmethod
    def full(cls, domain: Domain, k: int) -> "KRelation":
        return cls(domain, k, bits=(1 << tuple_count(domain.n, k)) - 1)

    @property
    def space(self) -> tuple:
        return injective_tuples(self.domain, self.k)

    def index_of(self, t: Sequence) -> int:
        return tuple_index(self.domain, self.k)[tuple(t)]

    def __contains__(self, t) -> bool:
        i = tuple_index(self.domain, self.k).get(tuple(t))
        return i is not None and bool(self.bits >> i & 1)

    def __iter__(self) -> Iterator[tuple]:
        space = self.space
        bits, i = self.bits, 0
        while bits:
            if bits & 1:
                yield space[i]
            bits >>= 1
            i += 1

    @property
    def tuples(self) -> list:
        return list(self)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def _compatible(self, other: "KRelation") -> None:
        if self.domain != other.domain or self.k != other.k:
            raise RelationError("relations over different domains or arities")

    def __eq__(self, other) -> bool:
        return (isinstance(other, KRelation) and self.k == other.k
                and self.domain == other.domain and self.bits == other.bits)

    def __hash__(self) -> int:
        return hash((self.domain, self.k, self.bits))

    def __and__(self, other: "KRelation") -> "KRelation":
        self._compatible(other)
        return KRelation(self.domain, self.k, bits=self.bits & other.bits)

    def __or__(self, other: "KRelation") -> "KRelation":
        self._compatible(other)
        return KRelation(self.domain, self.k, bits=self.bits | other.bits)

    def __sub__(self, other: "KRelation") -> "KRelation":
        self._compatible(other)
        return KRelation(self.domain, self.k, bits=self.bits & ~other.bits)

    def __le__(self, other: "KRelation") -> bool:
        self._compatible(other)
        return self.bits & ~other.bits == 0

    def with_tuples(self, add: Iterable = (), remove: Iterable = ()) -> "KRelation":
        index = tuple_index(self.domain, self.k)
        bits = self.bits
        for t in add:
            bits |= 1 << index[tuple(t)]
        for t in remove:
            bits &= ~(1 << index[tuple(t)])
        return KRelation(self.domain, self.k, bits=bits)

    def __repr__(self) -> str:
        body = ", ".join("(" + ",".join(map(str, t)) + ")" for t in self)
        return f"KRelation(k={self.k}, n={self.domain.n}, {{{body}}})"

    def to_dict(self) -> dict:
        return {"domain": list(self.domain.elements), "k": self.k,
                "tuples": [list(t) for t in self]}

    @classmethod
    def from_dict(cls, data: dict) -> "KRelation":
        try:
            domain = Domain(str(e) for e in data["domain"])
            k = int(data["k"])
            tuples = [tuple(str(x) for x in t) for t in data["tuples"]]
        except (KeyError, TypeError) as exc:
            raise RelationError(f"malformed relation object: {exc}") from exc
        return cls(domain, k, tuples)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KRelation":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RelationError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def mask_of(domain: Domain, k: int, tuples: Iterable[Sequence]) -> int:
    index = tuple_index(domain, k)
    bits = 0
    for t in tuples:
        bits |= 1 << index[tuple(t)]
    return bits


def restrict(R: KRelation, subset: Iterable[str]) -> KRelation:
    """The relation over ``subset`` holding the tuples of ``R`` inside it."""
    sub = R.domain.subdomain(subset)
    if sub.n < R.k:
        raise RelationError(f"cannot restrict a {R.k}-ary relation to {sub.n} elements")
    keep = set(sub.elements)
    return KRelation(sub, R.k, [t for t in R if keep.issuperset(t)])
