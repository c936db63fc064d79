"""JSON instance files with a byte-stable canonical form.

Canonical text: keys sorted, no insignificant whitespace, floats written
with ``%.17g`` so that parsing the output reproduces every value exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from ..core import CoverageOracle, CutOracle, Instance, ModularOracle, TableOracle
from ..errors import InputError

FORMAT_VERSION = 1


class InstanceFormatError(InputError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _dump(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError("non-finite numbers cannot be serialised")
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(f"{json.dumps(str(k))}:{_dump(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_dump(v) for v in value) + "]"
    raise InputError(f"cannot serialise {type(value).__name__}")


def canonical_json(value) -> str:
    return _dump(value) + "\n"


def canonicalize(text: str) -> str:
    return canonical_json(_loads(text))


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _require(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise InstanceFormatError(path + key if not path else f"{path}.{key}", "missing field")
    return doc[key]


def _number(x, path, *, positive=False, nonneg=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise InstanceFormatError(path, "expected a finite number")
    if positive and x <= 0:
        raise InstanceFormatError(path, "must be positive")
    if nonneg and x < 0:
        raise InstanceFormatError(path, "must be non-negative")
    return float(x)


def _integer(x, path, lo=None, hi=None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InstanceFormatError(path, "expected an integer")
    if (lo is not None and x < lo) or (hi is not None and x > hi):
        raise InstanceFormatError(path, f"must lie in [{lo}, {hi}]")
    return x


def _number_list(xs, path, length=None, **kw) -> list[float]:
    if not isinstance(xs, list):
        raise InstanceFormatError(path, "expected an array")
    if length is not None and len(xs) != length:
        raise InstanceFormatError(path, f"expected {length} entries, got {len(xs)}")
    return [_number(x, f"{path}[{k}]", **kw) for k, x in enumerate(xs)]


def _oracle(doc, n):
    kind = _require(doc, "kind", "oracle")
    try:
        if kind == "coverage":
            sets = _require(doc, "sets", "oracle")
            profits = _number_list(_require(doc, "profits", "oracle"), "oracle.profits",
                                   nonneg=True)
            if not isinstance(sets, list) or len(sets) != n:
                raise InstanceFormatError("oracle.sets", f"expected {n} adjacency lists")
            parsed = []
            for i, items in enumerate(sets):
                if not isinstance(items, list):
                    raise InstanceFormatError(f"oracle.sets[{i}]", "expected an array")
                parsed.append([_integer(v, f"oracle.sets[{i}][{k}]", 0, len(profits) - 1)
                               for k, v in enumerate(items)])
            return CoverageOracle(parsed, profits)
        if kind == "cut":
            edges = _require(doc, "edges", "oracle")
            directed = doc.get("directed", False)
            if not isinstance(directed, bool):
                raise InstanceFormatError("oracle.directed", "expected a boolean")
            if not isinstance(edges, list):
                raise InstanceFormatError("oracle.edges", "expected an array")
            parsed = []
            for k, e in enumerate(edges):
                p = f"oracle.edges[{k}]"
                if not isinstance(e, list) or len(e) != 3:
                    raise InstanceFormatError(p, "expected [u, v, w]")
                parsed.append([_integer(e[0], p + "[0]", 0, n - 1),
                               _integer(e[1], p + "[1]", 0, n - 1),
                               _number(e[2], p + "[2]", nonneg=True)])
            return CutOracle(n, parsed, directed)
        if kind == "modular":
            return ModularOracle(_number_list(_require(doc, "weights", "oracle"),
                                              "oracle.weights", length=n, nonneg=True))
        if kind == "table":
            values = _number_list(_require(doc, "values", "oracle"), "oracle.values",
                                  nonneg=True)
            if len(values) != 1 << n:
                raise InstanceFormatError("oracle.values",
                                          f"expected 2^{n} = {1 << n} entries, got {len(values)}")
            monotone = doc.get("monotone", False)
            if not isinstance(monotone, bool):
                raise InstanceFormatError("oracle.monotone", "expected a boolean")
            return TableOracle(values, monotone=monotone)
    except InstanceFormatError:
        raise
    except InputError as exc:
        raise InstanceFormatError("oracle", str(exc)) from None
    raise InstanceFormatError("oracle.kind", f"unknown oracle kind {kind!r}")


def instance_from_document(doc) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("", "top level must be an object")
    version = _require(doc, "version", "")
    if version != FORMAT_VERSION:
        raise InstanceFormatError("version", f"unsupported version {version!r}")
    n = _integer(_require(doc, "n", ""), "n", 0)
    d = _integer(_require(doc, "d", ""), "d", 1)
    costs = _require(doc, "costs", "")
    if not isinstance(costs, list) or len(costs) != d:
        raise InstanceFormatError("costs", f"expected {d} arrays (one per dimension)")
    cost = [_number_list(row, f"costs[{r}]", length=n, nonneg=True)
            for r, row in enumerate(costs)]
    budget = _number_list(_require(doc, "budgets", ""), "budgets", length=d, positive=True)
    oracle = _oracle(_require(doc, "oracle", ""), n)
    meta = doc.get("metadata", {}) or {}
    if not isinstance(meta, dict):
        raise InstanceFormatError("metadata", "expected an object")
    inst = Instance(cost, budget, oracle, name=meta.get("name"))
    inst.metadata = dict(meta)
    return inst


def parse_instance(text: str) -> Instance:
    return instance_from_document(_loads(text))


def instance_document(inst: Instance) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "n": inst.n,
        "d": inst.d,
        "costs": [[float(c) for c in row] for row in inst.raw_cost],
        "budgets": [float(b) for b in inst.raw_budget],
        "oracle": {"kind": inst.oracle.kind, **inst.oracle.payload()},
    }
    meta = dict(getattr(inst, "metadata", {}) or {})
    if inst.name and "name" not in meta:
        meta["name"] = inst.name
    if meta:
        doc["metadata"] = meta
    return doc


def serialize_instance(inst: Instance) -> str:
    return canonical_json(instance_document(inst))


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        inst = parse_instance(fh.read())
    if inst.name is None:
        inst.name = Path(path).stem
    return inst
