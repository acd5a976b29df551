"""Command-line entry point: ``relagg <subcommand> ...``.

Exit codes: 0 success / theorem confirmed, 1 property failed or
counterexample found, 2 malformed input, budget or precondition failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields

from .aggregation import ModelClass, ProductDomain, RuleError, VoterSet, rule_from_dict
from .coalitions import (CoalitionFamily, NotCoalitionDetermined, all_or_nothing_report,
                         build_U_family, is_filter, is_ultrafilter, least_element,
                         principal_element, winning_coalitions)
from .core import BudgetExceeded, Domain, KRelation, RelationError, injective_tuples
from .metaproperties import (PreconditionError, SearchBounds, connected_disjunctive_placements,
                             disjunctive_placement_report, simplicial_contagious_witness,
                             simplicial_implicative_witnesses, verify_contagious,
                             verify_disjunctive, verify_implicative, verify_window)
from .models import (CHECKERS, DEFAULT_BUDGET, PropertySpec, betweenness_from_order,
                     count_models, cyclic_seating, model_masks)
from .tables import TABLE_IDS, ProofTable, TableError, default_instance, replay_table
from .verifier import (axiom_profile, model_class_for, verify_dictatorship_theorem,
                       verify_neutrality_lemma, verify_oligarchy_theorem, verify_theorem1)

CONFIG_ENV = "RELAGG_CONFIG"
SIMPLICIAL_THEORY = "connected,exclusive,simplicial-transitive"
PATH_THEORY = "connected,exclusive,path-transitive"


class UsageError(ValueError):
    pass


@dataclass
class Config:
    budget: int = DEFAULT_BUDGET
    workers: int = 1
    format: str = "json"
    model_class: str = "betweenness"
    paths: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None) -> "Config":
        if not path:
            return cls()
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.budget, int) or self.budget < 1:
            raise UsageError("budget must be a positive integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise UsageError("workers must be a positive integer")
        if self.format not in ("json", "text"):
            raise UsageError("format must be json or text")
        if self.model_class not in ("betweenness", "cyclic", "full", "powerset"):
            raise UsageError(f"unknown model class {self.model_class!r}")
        if not isinstance(self.paths, dict) or set(self.paths) - {"output"}:
            raise UsageError("paths may only contain 'output'")


# -- output ------------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default)


def _default(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    return repr(obj)


def _text(obj, indent: str = "") -> list:
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val and len(json.dumps(val, default=_default)) > 70:
                lines.append(f"{indent}{key}:")
                lines.extend(_text(val, indent + "  "))
            else:
                lines.append(f"{indent}{key}: {json.dumps(val, default=_default)}")
    elif isinstance(obj, list):
        for item in obj:
            lines.append(f"{indent}- {json.dumps(item, sort_keys=True, default=_default)}")
    else:
        lines.append(f"{indent}{obj}")
    return lines


def emit(obj, cfg: Config) -> None:
    text = _dump(obj) if cfg.format == "json" else "\n".join(_text(json.loads(_dump(obj))))
    out = cfg.paths.get("output")
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# -- argument helpers --------------------------------------------------------------

def _domain(args) -> Domain:
    if getattr(args, "elements", None):
        return Domain(x.strip() for x in args.elements.split(",") if x.strip())
    return Domain.of_size(args.n)


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        if path.lstrip().startswith(("{", "[")):
            return json.loads(path)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON from {path!r}: {exc}") from exc


def _spec(text: str) -> PropertySpec:
    try:
        return PropertySpec.parse(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from exc


def _model_class(args, cfg: Config, domain: Domain, spec: PropertySpec | None = None) -> ModelClass:
    name = args.model_class or cfg.model_class
    mc = model_class_for(name, domain, args.k, spec, cfg.budget)
    if getattr(args, "slow_full_class", False) and name == "full":
        mc.masks()
    return mc


# -- subcommands -------------------------------------------------------------------

def cmd_props(args, cfg) -> int:
    R = KRelation.from_dict(_read_json(args.relation))
    spec = _spec(args.spec)
    results = {}
    for atom in spec.atoms:
        r = CHECKERS[atom](R)
        results[atom] = {"ok": r.ok, "witness": r.witness}
    emit({"relation": {"n": R.domain.n, "k": R.k, "size": len(R)}, "results": results,
          "all_pass": all(v["ok"] for v in results.values())}, cfg)
    return 0 if all(v["ok"] for v in results.values()) else 1


def cmd_family(args, cfg) -> int:
    order = [x.strip() for x in args.order.split(",") if x.strip()]
    if args.kind == "betweenness":
        R = betweenness_from_order(order)
    else:
        if args.k is None:
            raise UsageError("cyclic needs --k")
        R = cyclic_seating(order, args.k)
    emit(R.to_dict(), cfg)
    return 0


def cmd_models(args, cfg) -> int:
    d = _domain(args)
    spec = _spec(args.spec)
    budget = args.budget or cfg.budget
    masks = model_masks(d, args.k, spec, budget, workers=cfg.workers)
    out = {"n": d.n, "k": args.k, "spec": list(spec.atoms), "count": int(masks.size)}
    if args.list:
        out["models"] = [[list(t) for t in KRelation(d, args.k, bits=int(m))] for m in masks[: args.list]]
    emit(out, cfg)
    return 0


def _rule_setup(args, cfg):
    d = _domain(args)
    spec = _spec(args.spec) if args.spec else None
    mc = _model_class(args, cfg, d, spec)
    voters = VoterSet.of_size(args.voters)
    rule = rule_from_dict(_read_json(args.rule))
    return d, spec, mc, voters, rule, ProductDomain(mc, voters)


def cmd_rule_check(args, cfg) -> int:
    d, spec, mc, voters, rule, D = _rule_setup(args, cfg)
    emit({"rule": rule.name, "model_class": mc.name, "voters": list(voters.ids),
          "axioms": axiom_profile(rule, D, spec)}, cfg)
    return 0


def _family_analysis(W: CoalitionFamily) -> dict:
    f = is_filter(W)
    u = is_ultrafilter(W)
    return {"family": W.sets(), "filter": {"ok": f.ok, "witness": f.witness},
            "ultrafilter": {"ok": u.ok, **u.to_dict()}, "principal_element": principal_element(W),
            "least_element": least_element(W)}


def cmd_coalitions(args, cfg) -> int:
    if args.family:
        emit(_family_analysis(CoalitionFamily.from_dict(_read_json(args.family))), cfg)
        return 0
    if not args.rule:
        raise UsageError("coalitions needs --rule or --family")
    d, spec, mc, voters, rule, D = _rule_setup(args, cfg)
    per_tuple, distinct = {}, []
    for t in injective_tuples(d, args.k):
        W = winning_coalitions(rule, D, t)
        key = ",".join(t)
        if isinstance(W, NotCoalitionDetermined):
            per_tuple[key] = {"determined": False, "witness": W.to_dict()}
        else:
            per_tuple[key] = W.sets()
            if W not in distinct:
                distinct.append(W)
    U = build_U_family(rule, D)
    emit({"rule": rule.name, "winning_coalitions": per_tuple,
          "neutral": len(distinct) == 1 and all(isinstance(v, list) for v in per_tuple.values()),
          "U_family": _family_analysis(U), "all_or_nothing": all_or_nothing_report(rule, D)}, cfg)
    return 0


def cmd_meta(args, cfg) -> int:
    d = _domain(args)
    spec = _spec(args.spec)
    bounds = SearchBounds(args.cap_plus, args.cap_minus, args.max_rounds)
    out = {"spec": list(spec.atoms), "n": d.n, "k": args.k}
    kinds = ("contagious", "implicative", "disjunctive") if args.kind == "all" else (args.kind,)
    if "contagious" in kinds:
        r = verify_contagious(spec, d, args.k, bounds)
        out["contagious"] = {"condition": r.condition, "j": r.j, "pairs": len(r.witnesses),
                             "failures": r.failures,
                             "witnesses": [w.to_dict() for w in r.witnesses[: args.show]]}
    for kind, fn in (("implicative", verify_implicative), ("disjunctive", verify_disjunctive)):
        if kind in kinds:
            r = fn(spec, d, args.k, bounds)
            out[kind] = {"ok": r.ok, "witness": r.witness.to_dict() if r.ok else r.witness}
    if args.paper:
        out["hand_witnesses"] = hand_witness_report(d, args.k)
    emit(out, cfg)
    return 0


def hand_witness_report(d: Domain, k: int) -> dict:
    """Check the published windows for simplicial transitivity and connectedness."""
    if d.n < k + 1:
        raise PreconditionError(f"need at least k+1={k + 1} elements")
    a, b = default_instance(d, k)
    simp = PropertySpec(("simplicial-transitive",))
    cont, impl = {}, {}
    for j in range(1, k + 1):
        w, tuples = simplicial_contagious_witness(simp, a, b, j)
        r = verify_window("contagious", w, tuples, d, k)
        cont[str(j)] = {"valid": r.ok, "window": w.to_dict(),
                        "detail": r.witness.to_dict() if r.ok else r.witness}
        if j >= 2:
            impl[str(j)] = []
            for w, tuples in simplicial_implicative_witnesses(simp, a, b, j):
                r = verify_window("implicative", w, tuples, d, k)
                impl[str(j)].append({"tuples": [list(t) for t in tuples], "valid": r.ok,
                                     "window": w.to_dict(),
                                     "detail": r.witness.to_dict() if r.ok else r.witness})
    perms = [tuple(range(1, k + 1)), (2, 1) + tuple(range(3, k + 1))]
    disj = disjunctive_placement_report(PropertySpec(("connected",)), d, a, *perms)
    return {"simplicial_contagious": cont, "simplicial_implicative": impl,
            "connected_disjunctive": disj}


def cmd_verify(args, cfg) -> int:
    d = _domain(args)
    voters = VoterSet.of_size(args.voters)
    budget = args.budget or cfg.budget
    if args.theorem == "arrow":
        name = "full" if args.slow_full_class else (args.model_class or cfg.model_class)
        spec = _spec(args.spec) if args.spec else None
        mc = model_class_for(name, d, args.k, spec, budget)
        if args.slow_full_class:
            mc.masks()
        report = verify_theorem1(d, args.k, voters, mc, budget)
    else:
        default = "simplicial-transitive" if args.theorem == "oligarchy" else SIMPLICIAL_THEORY
        spec = _spec(args.spec or default)
        fn = {"neutrality": verify_neutrality_lemma, "oligarchy": verify_oligarchy_theorem,
              "dictatorship": verify_dictatorship_theorem}[args.theorem]
        ballots = None
        if args.slow_full_class:
            ballots = ModelClass.of_spec(d, args.k, PropertySpec(("trivial",)), budget)
            ballots.prime_restriction(spec, ModelClass.of_spec(d, args.k, spec, budget, materialize=True))
        report = fn(d, args.k, voters, spec, ballots=ballots, budget=budget)
    emit(report.to_dict(timing=not args.no_timing), cfg)
    return report.exit_code


def cmd_replay(args, cfg) -> int:
    ids = TABLE_IDS if args.table == "all" else (args.table,)
    if args.table != "all" and args.table not in TABLE_IDS:
        raise TableError(f"unknown table id {args.table!r}; known: {', '.join(TABLE_IDS)}")
    d = _domain(args)
    a, b = default_instance(d, args.k)
    reports = []
    classes = {}
    for tid in ids:
        name = args.family or cfg.model_class
        theory = PATH_THEORY if "path" in tid else SIMPLICIAL_THEORY
        spec = _spec(args.spec or theory)
        key = (name, spec)
        if key not in classes:
            classes[key] = model_class_for(name, d, args.k, spec, args.budget or cfg.budget)
        js = range(1, args.k + 1) if args.all_j and tid.startswith("prop1") else [args.j]
        for j in js:
            reports.append(replay_table(ProofTable.build(tid, a, b, j), classes[key]))
    emit(reports[0] if len(reports) == 1 else {"replays": reports}, cfg)
    return 0


# -- parser ------------------------------------------------------------------------

def _instance_args(p, n=4, k=3, voters=False):
    p.add_argument("--n", type=int, default=n, help="domain size (elements a, b, c, ...)")
    p.add_argument("--elements", help="comma-separated domain labels (overrides --n)")
    p.add_argument("--k", type=int, default=k, help="arity")
    if voters:
        p.add_argument("--voters", type=int, default=2, help="number of voters")


def _global_args(p, default):
    p.add_argument("--config", default=default, help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("--format", default=default, choices=("json", "text"), help="output format")
    p.add_argument("--output", default=default, help="write the report to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relagg", description=__doc__.splitlines()[0])
    _global_args(ap, None)
    common = argparse.ArgumentParser(add_help=False)
    _global_args(common, argparse.SUPPRESS)  # repeatable after the subcommand
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    p = sub.add_parser("props", help="check properties of a relation given as JSON")
    p.add_argument("relation", help="relation JSON file, inline JSON, or - for stdin")
    p.add_argument("--spec", default=SIMPLICIAL_THEORY, help="comma-separated property atoms")
    p.set_defaults(fn=cmd_props)

    p = sub.add_parser("family", help="generate a betweenness or cyclic-seating relation")
    p.add_argument("kind", choices=("betweenness", "cyclic"))
    p.add_argument("--order", required=True, help="comma-separated linear or cyclic order")
    p.add_argument("--k", type=int, help="arity for cyclic seating")
    p.set_defaults(fn=cmd_family)

    p = sub.add_parser("models", help="count relations satisfying a property")
    _instance_args(p, n=3)
    p.add_argument("--spec", required=True)
    p.add_argument("--list", type=int, default=0, metavar="N", help="also list the first N models")
    p.add_argument("--budget", type=int, help="max candidate subsets to scan")
    p.set_defaults(fn=cmd_models)

    for name, fn, help_ in (("rule-check", cmd_rule_check, "run every axiom checker on one rule"),
                            ("coalitions", cmd_coalitions, "winning coalitions and filter structure")):
        p = sub.add_parser(name, help=help_)
        _instance_args(p, voters=True)
        p.add_argument("--rule", required=(name == "rule-check"),
                       help='rule JSON, e.g. {"kind":"dictatorship","voter":"1"}')
        p.add_argument("--model-class", choices=("betweenness", "cyclic", "full", "powerset"))
        p.add_argument("--spec", help="property for collective rationality / the full class")
        p.add_argument("--slow-full-class", action="store_true")
        if name == "coalitions":
            p.add_argument("--family", help="analyse a coalition family JSON instead of a rule")
        p.set_defaults(fn=fn)

    p = sub.add_parser("meta", help="search metaproperty witnesses")
    _instance_args(p, n=5)
    p.add_argument("--spec", required=True)
    p.add_argument("--kind", choices=("contagious", "implicative", "disjunctive", "all"), default="all")
    p.add_argument("--paper", action="store_true", help="also check the hand-made windows")
    p.add_argument("--cap-plus", type=int)
    p.add_argument("--cap-minus", type=int)
    p.add_argument("--max-rounds", type=int, default=48)
    p.add_argument("--show", type=int, default=3, help="contagious witnesses to print")
    p.set_defaults(fn=cmd_meta)

    p = sub.add_parser("verify", help="verify a theorem exhaustively")
    p.add_argument("theorem", choices=("arrow", "neutrality", "oligarchy", "dictatorship"))
    _instance_args(p, voters=True)
    p.add_argument("--model-class", choices=("betweenness", "cyclic", "full", "powerset"))
    p.add_argument("--spec")
    p.add_argument("--budget", type=int)
    p.add_argument("--slow-full-class", action="store_true",
                   help="enumerate the full model class up front (2^T scan)")
    p.add_argument("--no-timing", action="store_true", help="omit the timing field")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("replay", help="replay proof tables against a model class")
    p.add_argument("table", help=f"one of {', '.join(TABLE_IDS)} or 'all'")
    _instance_args(p)
    p.add_argument("--family", choices=("betweenness", "cyclic", "full"))
    p.add_argument("--spec", help="property defining the full class (default per table)")
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--all-j", action="store_true", help="replay prop1 tables for every j")
    p.add_argument("--budget", type=int)
    p.set_defaults(fn=cmd_replay)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = Config.load(args.config or os.environ.get(CONFIG_ENV))
        if args.format:
            cfg.format = args.format
        if args.output:
            cfg.paths = {**cfg.paths, "output": args.output}
        if getattr(args, "budget", None) is not None and args.budget < 1:
            raise UsageError("budget must be a positive integer")
        return args.fn(args, cfg)
    except (UsageError, RelationError, RuleError, TableError, PreconditionError,
            BudgetExceeded, ValueError) as exc:
        print(f"relagg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
