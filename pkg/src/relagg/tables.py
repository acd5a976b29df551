"""Proof tables: which tuples each coalition's ballots must hold or avoid.

A table has named columns (sets of tuples) and named rows (coalitions).
Each cell is one of ``+`` (every column tuple held), ``-`` (none held),
``m`` (copy an arbitrary base profile on that column) or ``.`` (free).
Replaying a table asks, row by row, whether a single ballot from a given
model class can realise the row's marks.  A mimic cell is replayed in
both of its variants.

Columns are written in a small expression language over the symbols
``a1 .. ak`` and ``b``:

* ``a``                       the tuple (a1, ..., ak)
* ``perm(a)``                 every other arrangement of a
* ``(x1,...,xk)``             one explicit tuple
* ``delta(x1,...,xm)[+i,-j]`` length m-1 subsequences keeping position i
                              and dropping position j (1-based; brackets optional)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .core import Domain, KRelation, delta_subsequences, injective_tuples, tuple_index
from .sat import SatOracle, bit_indices

MARKS = {"+": "required", "-": "forbidden", "m": "mimic", ".": "free"}
TABLE_IDS = ("prop1-simplicial", "prop1-path", "prop3-simplicial", "prop3-path",
             "claim-F3", "claim-F4-simplicial", "claim-F4-path")


class TableError(ValueError):
    """Unknown table id or malformed column expression."""


_SYM = r"(?:a\d+|b)"
_TUPLE_RE = re.compile(rf"^\(\s*({_SYM}(?:\s*,\s*{_SYM})*)\s*\)$")
_DELTA_RE = re.compile(rf"^delta\(\s*({_SYM}(?:\s*,\s*{_SYM})*)\s*\)(?:\[([^\]]*)\])?$")


def _symbols(text: str, env: dict) -> tuple:
    out = []
    for s in (x.strip() for x in text.split(",")):
        if s not in env:
            raise TableError(f"unknown symbol {s!r} in column expression")
        out.append(env[s])
    return tuple(out)


def column_tuples(expr: str, a: Sequence, b) -> list:
    """Evaluate a column expression for the concrete tuple ``a`` and element ``b``."""
    a = tuple(a)
    env = {f"a{i}": x for i, x in enumerate(a, start=1)}
    env["b"] = b
    expr = expr.strip()
    if expr == "a":
        return [a]
    if expr == "perm(a)":
        return [p for p in permutations(a) if p != a]
    m = _TUPLE_RE.match(expr)
    if m:
        t = _symbols(m.group(1), env)
        if len(t) != len(a):
            raise TableError(f"column {expr!r} has arity {len(t)}, expected {len(a)}")
        return [t]
    m = _DELTA_RE.match(expr)
    if m:
        seq = _symbols(m.group(1), env)
        if len(seq) != len(a) + 1:
            raise TableError(f"delta sequence in {expr!r} must have length {len(a) + 1}")
        req, forb = set(), set()
        for item in filter(None, (x.strip() for x in (m.group(2) or "").split(","))):
            if not re.fullmatch(r"[+-]\d+", item):
                raise TableError(f"bad position marker {item!r} in {expr!r}")
            (req if item[0] == "+" else forb).add(int(item[1:]))
        return delta_subsequences(seq, 1, required=req, forbidden=forb)
    raise TableError(f"unknown column syntax {expr!r}")


def _seq(*parts) -> str:
    return ",".join(parts)


def _a(k: int, lo: int = 1, hi: int | None = None) -> list:
    hi = k if hi is None else hi
    return [f"a{i}" for i in range(lo, hi + 1)]


def table_spec(table_id: str, k: int, j: int = 2) -> dict:
    """Column expressions and row marks of a built-in table."""
    if table_id == "prop1-simplicial":
        s = _a(k, 1, j) + ["b"] + _a(k, j + 1)
        cols = [("a", "a"), ("a^-j,b", "(" + _seq(*_a(k, 1, j - 1), "b", *_a(k, j + 1)) + ")"),
                ("delta^{j,j+1}", f"delta({_seq(*s)})[+{j},+{j + 1}]")]
        rows = [("U", "+++"), ("U^c", "--+")]
    elif table_id == "prop1-path":
        if j >= 2:
            third = "(" + _seq(*_a(k, 2, j), "b", *_a(k, j + 1)) + ")"
        else:  # the j = 1 variant swaps the roles of a_1 and b
            third = "(" + _seq("b", *_a(k, 1, k - 1)) + ")"
        cols = [("a", "a"), ("a^-j,b", "(" + _seq(*_a(k, 1, j - 1), "b", *_a(k, j + 1)) + ")"),
                ("bridge", third)]
        rows = [("U", "+++"), ("U^c", "--+")]
    elif table_id == "prop3-simplicial":
        s = ["a1", "b"] + _a(k, 2)
        cols = [("a", "a"), ("b,a2..ak", "(" + _seq("b", *_a(k, 2)) + ")"),
                ("delta^{1,2}", f"delta({_seq(*s)})[+1,+2]")]
        rows = [("U", "+++"), ("U^c", "m+-")]
    elif table_id == "prop3-path":
        cols = [("a", "a"), ("a^-(k-1),b", "(" + _seq(*_a(k, 1, k - 2), "b", f"a{k}") + ")"),
                ("a^-k,b", "(" + _seq(*_a(k, 1, k - 1), "b") + ")")]
        rows = [("U", "+++"), ("U^c", "m-+")]
    elif table_id == "claim-F3":
        cols = [("a", "a"), ("a^tau", "perm(a)")]
        rows = [("U", "+-"), ("V", "-+"), ("U^c&V^c", "--")]
    elif table_id == "claim-F4-simplicial":
        ba = ["b"] + _a(k)
        cols = [("a", "a"), ("a^tau", "perm(a)"), ("delta(b,a)^{1,2}", f"delta({_seq(*ba)})[+1,+2]"),
                ("delta(b,a)", f"delta({_seq(*ba)})"), ("delta(a,b)", f"delta({_seq(*_a(k), 'b')})")]
        rows = [("V", "-++--"), ("W", "+--+-"), ("U^c", "+---+")]
    elif table_id == "claim-F4-path":
        cols = [("a", "a"), ("a^tau", "perm(a)"), ("a2..ak,b", "(" + _seq(*_a(k, 2), "b") + ")"),
                ("b,a2..ak", "(" + _seq("b", *_a(k, 2)) + ")"),
                ("a1..a(k-1),b", "(" + _seq(*_a(k, 1, k - 1), "b") + ")")]
        rows = [("V", "-++--"), ("W", "+-+-+"), ("U^c", "+--+-")]
    else:
        raise TableError(f"unknown table id {table_id!r}; known: {', '.join(TABLE_IDS)}")
    return {"columns": cols, "rows": rows}


@dataclass
class ProofTable:
    """A table instantiated on concrete elements; columns are made disjoint
    by giving each tuple to the leftmost column that lists it."""

    id: str
    a: tuple
    b: object
    columns: list            # (name, expression, [tuples])
    rows: list               # (name, marks string)
    params: dict = field(default_factory=dict)
    overlaps: dict = field(default_factory=dict)

    @classmethod
    def build(cls, table_id: str, a: Sequence, b, j: int = 2) -> "ProofTable":
        a = tuple(a)
        k = len(a)
        if b in a or len(set(a)) != k:
            raise TableError("a must be injective and b must be a fresh element")
        if not 1 <= j <= k:
            raise TableError(f"j={j} out of range 1..{k}")
        if table_id == "prop3-path" and k < 2:
            raise TableError("prop3-path needs k >= 2")
        spec = table_spec(table_id, k, j)
        return cls.from_expressions(table_id, a, b, spec["columns"], spec["rows"],
                                    {"a": list(a), "b": b, "j": j, "k": k})

    @classmethod
    def from_expressions(cls, table_id, a, b, columns, rows, params=None) -> "ProofTable":
        seen, cols, overlaps = set(), [], {}
        for name, expr in columns:
            ts = column_tuples(expr, a, b)
            kept = [t for t in ts if t not in seen]
            if len(kept) < len(ts):
                overlaps[name] = [list(t) for t in ts if t in seen]
            seen.update(kept)
            cols.append((name, expr, kept))
        for name, marks in rows:
            if len(marks) != len(cols) or any(m not in MARKS for m in marks):
                raise TableError(f"row {name!r} marks {marks!r} do not fit {len(cols)} columns")
        return cls(table_id, tuple(a), b, cols, list(rows), dict(params or {}), overlaps)

    def expanded_rows(self) -> list:
        """Rows with each mimic cell split into its held / not-held variant."""
        out = []
        for name, marks in self.rows:
            if "m" not in marks:
                out.append((name, marks))
                continue
            out.append((name + " [base holds]", marks.replace("m", "+")))
            out.append((name + " [base lacks]", marks.replace("m", "-")))
        return out

    def row_masks(self, domain: Domain, k: int, marks: str) -> tuple:
        index = tuple_index(domain, k)
        req = forb = 0
        for (_, _, ts), mark in zip(self.columns, marks):
            bits = 0
            for t in ts:
                try:
                    bits |= 1 << index[t]
                except KeyError:
                    raise TableError(f"column tuple {t!r} is not over the domain") from None
            if mark == "+":
                req |= bits
            elif mark == "-":
                forb |= bits
        return req, forb

    def to_dict(self) -> dict:
        return {"id": self.id, "params": self.params,
                "columns": [{"name": n, "expr": e, "tuples": [list(t) for t in ts]}
                            for n, e, ts in self.columns],
                "rows": [{"name": n, "marks": m} for n, m in self.rows],
                "overlaps": self.overlaps}


def replay_table(table: ProofTable, model_class, domain: Domain | None = None) -> dict:
    """Per expanded row: SAT with the least matching ballot, or UNSAT.

    The forward scan is confirmed by a second pass in the opposite order
    using plain relation membership.  For clause-defined classes the SAT
    oracle is asked as well and must agree.
    """
    domain = domain or model_class.domain
    k = model_class.k
    masks = model_class.masks()
    space = injective_tuples(domain, k)
    rows = []
    for name, marks in table.expanded_rows():
        req, forb = table.row_masks(domain, k, marks)
        hit = np.flatnonzero(((masks & np.uint64(req)) == np.uint64(req))
                             & ((masks & np.uint64(forb)) == 0))
        first = int(masks[hit[0]]) if hit.size else None
        need = [space[t] for t in bit_indices(req)]
        avoid = [space[t] for t in bit_indices(forb)]
        back = next((R for R in (KRelation(domain, k, bits=int(m)) for m in masks[::-1])
                     if all(t in R for t in need) and not any(t in R for t in avoid)), None)
        agree = (first is None) == (back is None)
        entry = {"row": name, "marks": marks, "status": "SAT" if first is not None else "UNSAT",
                 "confirmed": agree, "matches": int(hit.size)}
        if model_class.clausal:
            with SatOracle(model_class.T, model_class.spec.clauses(domain, k)) as o:
                sat = o.find(req, forb)
            entry["sat_oracle"] = "SAT" if sat is not None else "UNSAT"
            entry["confirmed"] = agree and (sat is None) == (first is None)
        if first is not None:
            entry["exemplar"] = [list(t) for t in KRelation(domain, k, bits=first)]
        rows.append(entry)
    return {"table": table.to_dict(), "model_class": model_class.name,
            "n": domain.n, "k": k, "rows": rows}


def default_instance(domain: Domain, k: int) -> tuple:
    """a = the first k elements, b = the next one."""
    if domain.n < k + 1:
        raise TableError(f"tables need k+1={k + 1} elements, domain has {domain.n}")
    return domain.elements[:k], domain.elements[k]


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
