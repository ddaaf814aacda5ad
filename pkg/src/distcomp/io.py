"""JSON documents for functions, sources, codes and regions."""

from __future__ import annotations

import json
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

import numpy as np

from .codes.code import DistributedCode, code_from_tables
from .funclass import (
    SingleLetterFunction,
    VectorFunction,
    comparison_function,
    identity_function,
    joint_type_function,
    lift_symbolwise,
    theorem9_function,
)
from .regions import RateRegion
from .sources import SourceModel


class DocumentError(ValueError):
    """A JSON document is missing a field or holds a value of the wrong shape."""


SCHEMAS = ("classify", "code", "function", "region", "smoothness", "source", "theorem9_demo")


def schema(name):
    """A shipped JSON schema by short name, e.g. ``schema("source")``."""
    if name not in SCHEMAS:
        raise KeyError(f"no schema named {name!r}")
    text = resources.files("distcomp").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: not valid JSON ({exc})") from exc


def dumps(doc) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(doc, path):
    Path(path).write_text(dumps(doc), encoding="utf-8")


def _field(doc, key):
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError(f"missing field {key!r}")
    return doc[key]


def _size(doc, key):
    v = _field(doc, key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise DocumentError(f"{key!r} must be a positive integer")
    return v


def parse_probability(value) -> float:
    """A probability written as a double or a decimal string such as ``"0.35"``."""
    if isinstance(value, bool):
        raise DocumentError("probabilities must be numbers or decimal strings")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Decimal(value.strip()))
        except InvalidOperation as exc:
            raise DocumentError(f"not a decimal probability: {value!r}") from exc
    raise DocumentError("probabilities must be numbers or decimal strings")


def _prob_table(rows):
    if not isinstance(rows, list):
        raise DocumentError("probability table must be a list")
    if rows and isinstance(rows[0], list):
        return np.array([[parse_probability(v) for v in r] for r in rows], dtype=float)
    return np.array([parse_probability(v) for v in rows], dtype=float)


def _label(z):
    if isinstance(z, list):
        return tuple(_label(v) for v in z)
    if isinstance(z, (str, int)) and not isinstance(z, bool):
        return z
    raise DocumentError(f"labels must be strings or integers, got {z!r}")


# --------------------------------------------------------------------------
# functions


def function_from_dict(doc) -> SingleLetterFunction:
    """``{"x_size", "y_size", "table"}`` with the table row-major in x."""
    xs, ys = _size(doc, "x_size"), _size(doc, "y_size")
    table = _field(doc, "table")
    if not isinstance(table, list) or len(table) != xs or any(
        not isinstance(r, list) or len(r) != ys for r in table
    ):
        raise DocumentError(f"table must be {xs} rows of {ys} labels")
    return SingleLetterFunction(xs, ys, tuple(tuple(_label(z) for z in r) for r in table))


def function_to_dict(f: SingleLetterFunction):
    return {
        "x_size": f.x_size,
        "y_size": f.y_size,
        "table": [[_jsonable(z) for z in row] for row in f.table],
    }


def vector_function_from_dict(doc, n) -> VectorFunction:
    """A block function of length ``n``.

    Documents with a ``table`` are lifted symbolwise. A ``kind`` of
    ``identity``, ``theorem9`` (needs ``rho``), ``joint_type`` or
    ``comparison`` selects a built-in family instead.
    """
    kind = doc.get("kind", "symbolwise") if isinstance(doc, dict) else None
    if kind == "symbolwise":
        return lift_symbolwise(function_from_dict(doc), n)
    xs, ys = _size(doc, "x_size"), _size(doc, "y_size")
    if kind == "identity":
        return identity_function(n, xs, ys)
    if kind == "theorem9":
        return theorem9_function(xs, ys, n, parse_probability(_field(doc, "rho")))
    if kind == "joint_type":
        return joint_type_function(n, xs, ys)
    if kind == "comparison":
        if xs != ys:
            raise DocumentError("comparison needs equal alphabets")
        return comparison_function(n, xs)
    raise DocumentError(f"unknown function kind {kind!r}")


# --------------------------------------------------------------------------
# sources


def source_from_dict(doc) -> SourceModel:
    kind = _field(doc, "kind")
    try:
        if kind == "iid":
            return SourceModel.iid(_prob_table(_field(doc, "joint")))
        xs, ys = _size(doc, "x_size"), _size(doc, "y_size")
        if kind == "markov":
            return SourceModel.markov(
                xs, ys, _prob_table(_field(doc, "transition")), _prob_table(_field(doc, "initial"))
            )
        if kind == "mixture":
            comps = [source_from_dict(c) for c in _field(doc, "components")]
            return SourceModel.mixture(comps, [parse_probability(w) for w in _field(doc, "weights")])
        if kind == "two_symbolwise":
            return SourceModel.two_symbolwise(xs, ys, _prob_table(_field(doc, "pair_joint")))
        if kind == "theorem9":
            return SourceModel.theorem9(
                xs, ys, parse_probability(_field(doc, "rho")), parse_probability(_field(doc, "epsilon"))
            )
    except DocumentError:
        raise
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc
    raise DocumentError(f"unknown source kind {kind!r}")


def source_to_dict(source: SourceModel):
    doc = {"kind": source.kind, "x_size": source.x_size, "y_size": source.y_size}
    if source.kind == "iid":
        doc["joint"] = source.joint.tolist()
    elif source.kind == "markov":
        doc["transition"] = source.transition.tolist()
        doc["initial"] = source.initial.tolist()
    elif source.kind == "mixture":
        doc["components"] = [source_to_dict(c) for c in source.components]
        doc["weights"] = list(source.weights)
    elif source.kind == "two_symbolwise":
        doc["pair_joint"] = source.joint.tolist()
    else:
        doc["rho"] = source.rho
        doc["epsilon"] = source.epsilon
    return doc


# --------------------------------------------------------------------------
# codes and regions


def code_to_dict(code: DistributedCode):
    return code.to_dict()


def code_from_dict(doc) -> DistributedCode:
    """Explicit tables; ``dec`` maps ``"c1|c2"`` to a label."""
    n = _size(doc, "n")
    xs, ys = _size(doc, "x_size"), _size(doc, "y_size")
    enc1, enc2 = _field(doc, "enc1"), _field(doc, "enc2")
    for enc in (enc1, enc2):
        if not all(isinstance(c, str) and set(c) <= {"0", "1"} for c in enc):
            raise DocumentError("codewords must be bit strings")
    dec = {}
    for key, label in _field(doc, "dec").items():
        if key.count("|") != 1:
            raise DocumentError(f"decoder key {key!r} must read 'c1|c2'")
        c1, c2 = key.split("|")
        dec[(c1, c2)] = None if label is None else _label(label)
    try:
        return code_from_tables(n, xs, ys, enc1, enc2, dec, doc.get("name", "code"))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def region_from_dict(doc) -> RateRegion:
    return RateRegion(*(float(_field(doc, k)) for k in ("r1_min", "r2_min", "sum_min")))


def _jsonable(z):
    if isinstance(z, tuple):
        return [_jsonable(v) for v in z]
    return z
