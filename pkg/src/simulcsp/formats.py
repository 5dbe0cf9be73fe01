"""Versioned JSON formats for instances, multi-instances and reports.

Instance::

    {"kind": "cut"|"sat"|"conj", "n": .., "q": .., "w": ..,
     "constraints": [{"type": "cut", "u": .., "v": .., "weight": ..}
                   | {"type": "clause", "lits": [[var, sign], ..], "weight": ..}
                   | {"type": "term", "bind": [[var, val], ..], "weight": ..}]}

Generic instances use kind "generic" and constraints
``{"type": "predicate", "vars": [..], "rows": [[..], ..], "weight": ..}``.
A multi-instance file wraps a list of instances with targets::

    {"schema": "simulcsp/1", "instances": [..], "targets": [..], "witness": [..]?}
"""

from __future__ import annotations

import json
import math

import numpy as np

from .core import Clause, Cut, Instance, MultiInstance, Term
from .errors import InputError
from .reduce import GenericInstance, PredicateConstraint
from .solvers_set import SolveReport

SCHEMA = "simulcsp/1"


def _num(x) -> float:
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError:
            raise InputError(f"not a number: {x!r}") from None
    return float(x)


def _finite(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def constraint_to_dict(c, weight: float) -> dict:
    if isinstance(c, Cut):
        return {"type": "cut", "u": c.u, "v": c.v, "weight": weight}
    if isinstance(c, Clause):
        return {"type": "clause", "lits": [[v, int(s)] for v, s in c.lits], "weight": weight}
    if isinstance(c, Term):
        return {"type": "term", "bind": [[v, a] for v, a in c.bind], "weight": weight}
    if isinstance(c, PredicateConstraint):
        return {"type": "predicate", "vars": list(c.vars), "rows": [list(r) for r in sorted(c.rows)],
                "weight": weight}
    raise InputError(f"unknown constraint {c!r}")


def constraint_from_dict(d: dict, q: int = 2):
    try:
        typ = d["type"]
        if typ == "cut":
            return Cut(int(d["u"]), int(d["v"]))
        if typ == "clause":
            return Clause(tuple((int(v), bool(s)) for v, s in d["lits"]))
        if typ == "term":
            return Term(tuple((int(v), int(a)) for v, a in d["bind"]))
        if typ == "predicate":
            return PredicateConstraint(tuple(d["vars"]), frozenset(tuple(r) for r in d["rows"]), q)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"malformed constraint {d!r}: {e}") from None
    raise InputError(f"unknown constraint type {d.get('type')!r}")


def instance_to_dict(W) -> dict:
    if isinstance(W, GenericInstance):
        kind = "generic"
    else:
        kind = W.kind
    return {"kind": kind, "n": W.n, "q": W.q, "w": W.w,
            "constraints": [constraint_to_dict(c, float(wt)) for c, wt in zip(W.constraints, W.weights)]}


def instance_from_dict(d: dict):
    if not isinstance(d, dict):
        raise InputError("an instance must be a JSON object")
    try:
        kind, n = d["kind"], int(d["n"])
        q = int(d.get("q", 2))
        w = d.get("w")
        w = None if w is None else int(w)
        items = [(constraint_from_dict(c, q), _num(c.get("weight", 1.0))) for c in d["constraints"]]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"malformed instance: {e}") from None
    if kind == "generic":
        return GenericInstance(n, items, q=q, w=w)
    return Instance(kind, n, items, q=q, w=w)


def multi_to_dict(multi, targets=None, witness=None, extra: dict | None = None) -> dict:
    """``multi`` is a MultiInstance or a list of (generic) instances plus ``targets``."""
    if isinstance(multi, MultiInstance):
        instances, targets = multi.instances, multi.targets.tolist()
    else:
        instances = list(multi)
    out = {"schema": SCHEMA, "instances": [instance_to_dict(W) for W in instances],
           "targets": [_finite(float(c)) for c in targets]}
    if witness is not None:
        out["witness"] = [int(x) for x in witness]
    if extra:
        out.update(extra)
    return out


def multi_from_dict(d: dict):
    """Return ``(multi, witness)``; for generic files ``multi`` is ``(instances, targets)``."""
    if not isinstance(d, dict):
        raise InputError("a multi-instance file must be a JSON object")
    if d.get("schema", SCHEMA) != SCHEMA:
        raise InputError(f"unsupported schema {d.get('schema')!r}, expected {SCHEMA}")
    if "instances" not in d:
        # a bare instance is a one-instance multi with target 1
        d = {"instances": [d], "targets": d.get("targets", [1.0])}
    instances = [instance_from_dict(x) for x in d["instances"]]
    targets = [_num(c) for c in d.get("targets", [1.0] * len(instances))]
    witness = d.get("witness")
    witness = None if witness is None else np.asarray(witness, dtype=np.int64)
    if any(isinstance(W, GenericInstance) for W in instances):
        if not all(isinstance(W, GenericInstance) for W in instances):
            raise InputError("cannot mix generic and typed instances")
        if len(targets) != len(instances):
            raise InputError("one target per instance is required")
        return (instances, targets), witness
    return MultiInstance(instances, targets), witness


def dumps(obj) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}") from None


def report_to_dict(report: SolveReport) -> dict:
    return {"schema": SCHEMA, **report.to_dict()}


def report_from_dict(d: dict) -> SolveReport:
    d = dict(d)
    d.pop("schema", None)
    d.pop("wall_time", None)
    return SolveReport.from_dict(d)
