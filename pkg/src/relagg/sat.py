"""Satisfiability oracles over the tuple-bit encoding of relations.

Variable ``i + 1`` stands for "canonical tuple ``i`` is in R".  Two oracles
answer the same question, "is there a model containing ``required`` and
avoiding ``forbidden``?": a CDCL solver over the clause form, and a scan of
explicitly enumerated model bitmasks.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from pysat.solvers import Solver

from .core import Domain, tuple_count
from .models import DEFAULT_BUDGET, PropertySpec, model_masks

SOLVER_NAME = "minisat22"


def bit_indices(mask: int) -> list:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def clause_to_cnf(premise: int, conclusion: int) -> list:
    return [-(i + 1) for i in bit_indices(premise)] + [i + 1 for i in bit_indices(conclusion)]


@lru_cache(maxsize=64)
def _cnf(clauses: tuple) -> tuple:
    return tuple(clause_to_cnf(p, c) for p, c in clauses)


class SatOracle:
    """Incremental CDCL oracle for a clause-defined relation class.

    Answers depend on the query history (phase saving), so a fresh oracle
    should back every independent computation that must be reproducible.
    """

    def __init__(self, T: int, clauses: Iterable, units: Iterable = ()):
        self.T = T
        self.calls = 0
        self._solver = Solver(name=SOLVER_NAME)
        if isinstance(clauses, tuple):
            cnf = _cnf(clauses)
        else:
            cnf = [clause_to_cnf(p, c) for p, c in clauses]
        self._solver.append_formula(cnf)
        for premise, conclusion in units:
            self._solver.add_clause(clause_to_cnf(premise, conclusion))

    @classmethod
    def for_spec(cls, spec: PropertySpec, domain: Domain, k: int) -> "SatOracle":
        return cls(tuple_count(domain.n, k), spec.clauses(domain, k))

    def find(self, required: int = 0, forbidden: int = 0) -> int | None:
        if required & forbidden:
            return None
        self.calls += 1
        assumptions = ([i + 1 for i in bit_indices(required)]
                       + [-(i + 1) for i in bit_indices(forbidden)])
        if not self._solver.solve(assumptions=assumptions):
            return None
        bits = 0
        for lit in self._solver.get_model():
            if lit > 0 and lit <= self.T:
                bits |= 1 << (lit - 1)
        return bits

    def close(self) -> None:
        self._solver.delete()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EnumOracle:
    """Oracle over an explicit array of model bitmasks; returns the least
    matching model in bitmask order."""

    def __init__(self, masks: np.ndarray):
        self.masks = np.asarray(masks, dtype=np.uint64)
        self.calls = 0

    @classmethod
    def for_spec(cls, spec: PropertySpec, domain: Domain, k: int,
                 budget: int = DEFAULT_BUDGET) -> "EnumOracle":
        return cls(model_masks(domain, k, spec, budget))

    def find(self, required: int = 0, forbidden: int = 0) -> int | None:
        if required & forbidden:
            return None
        self.calls += 1
        x = self.masks
        r, f = np.uint64(required), np.uint64(forbidden)
        hit = np.flatnonzero(((x & r) == r) & ((x & f) == 0))
        return int(x[hit[0]]) if hit.size else None

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        pass


def make_oracle(spec: PropertySpec, domain: Domain, k: int, budget: int = DEFAULT_BUDGET,
                prefer: str = "sat"):
    """SAT oracle when the spec has a clause form, else explicit enumeration."""
    if spec.clausal and prefer == "sat":
        return SatOracle.for_spec(spec, domain, k)
    return EnumOracle.for_spec(spec, domain, k, budget)


def solve_cnf(cnf: Sequence[Sequence[int]], assumptions: Sequence[int] = ()) -> list | None:
    """One-shot solve; returns the model literal list or ``None``."""
    with Solver(name=SOLVER_NAME, bootstrap_with=[list(c) for c in cnf]) as s:
        return s.get_model() if s.solve(assumptions=list(assumptions)) else None
