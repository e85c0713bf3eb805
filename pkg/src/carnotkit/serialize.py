"""JSON input and output shared by the CLI.

Output is deterministic: keys are sorted, rationals are ``"p/q"`` strings
and floats are written with 17 significant digits.  Non-finite floats,
which JSON cannot express, become the strings ``"inf"``, ``"-inf"`` and
``"nan"``.
"""

from __future__ import annotations

import ast
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .chart import FilteredChart, ValidationReport, VectorField
from .poly import Poly, fraction_str


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Poly):
        return obj.to_json()
    if isinstance(obj, VectorField):
        return obj.to_json()
    if isinstance(obj, ValidationReport):
        return to_jsonable(obj.to_json())
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _flat(v) -> bool:
    if isinstance(v, list):
        return all(not isinstance(x, (dict, list)) for x in v)
    return not isinstance(v, dict)


def _emit(obj, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, float):
        if math.isnan(obj):
            out.append('"nan"')
        elif math.isinf(obj):
            out.append('"inf"' if obj > 0 else '"-inf"')
        else:
            text = f"{obj:.17g}"
            if all(ch not in text for ch in ".en"):
                text += ".0"
            out.append(text)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        if len(obj) <= 3 and all(_flat(v) for v in obj.values()):
            out.append("{")
            for i, key in enumerate(sorted(obj)):
                out.append(json.dumps(key) + ": ")
                _emit(obj[key], indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("}")
            return
        out.append("{\n")
        for i, key in enumerate(sorted(obj)):
            out.append(pad + json.dumps(key) + ": ")
            _emit(obj[key], indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(json.dumps(obj))


def dumps(obj: Any, indent: int = 2) -> str:
    out: list[str] = []
    _emit(to_jsonable(obj), indent, 0, out)
    return "".join(out)


# input


def parse_rational(text: str | int | float) -> Fraction:
    if isinstance(text, str):
        return Fraction(text.strip())
    return Fraction(text)


def parse_point(text: str | Sequence) -> tuple[Fraction, ...]:
    if isinstance(text, str):
        text = text.strip()
        if not text:
            return ()
        return tuple(parse_rational(t) for t in text.split(","))
    return tuple(parse_rational(t) for t in text)


_BINOPS = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div", ast.Pow: "pow"}


def parse_expression(text: str, names: Sequence[str]) -> Poly:
    """Polynomial from an arithmetic expression such as ``"z - x*y/2"``."""
    n = len(names)
    index = {name: i for i, name in enumerate(names)}

    def walk(node) -> Poly | Fraction:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return Fraction(str(node.value))
        if isinstance(node, ast.Name):
            if node.id not in index:
                raise ValueError(f"unknown variable {node.id!r}; expected one of {list(names)}")
            return Poly.var(n, index[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            a, b = walk(node.left), walk(node.right)
            op = _BINOPS[type(node.op)]
            if op == "pow":
                if isinstance(b, Poly) or b.denominator != 1 or b < 0:
                    raise ValueError("exponents must be nonnegative integer constants")
                return a ** int(b)
            if op == "div":
                if isinstance(b, Poly):
                    if not b.is_constant():
                        raise ValueError("division only by constants")
                    b = b.constant_term()
                return a / b if isinstance(a, Poly) else a / b
            if op == "add":
                return a + b if isinstance(a, Poly) or not isinstance(b, Poly) else b + a
            if op == "sub":
                return a - b if isinstance(a, Poly) or not isinstance(b, Poly) else -(b - a)
            return a * b if isinstance(a, Poly) or not isinstance(b, Poly) else b * a
        raise ValueError(f"unsupported syntax in polynomial expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse polynomial expression {text!r}") from exc
    value = walk(tree)
    return value if isinstance(value, Poly) else Poly.constant(n, value)


def parse_poly(data, names: Sequence[str]) -> Poly:
    if isinstance(data, str):
        return parse_expression(data, names)
    if isinstance(data, (int, float)):
        return Poly.constant(len(names), Fraction(str(data)))
    return Poly.from_json(data, len(names))


def parse_field(data, names: Sequence[str]) -> VectorField:
    if isinstance(data, Mapping):
        comps = [Poly.zero(len(names)) for _ in names]
        for key, value in data.items():
            if key not in names:
                raise ValueError(f"unknown coordinate {key!r} in field definition")
            comps[list(names).index(key)] = parse_poly(value, names)
        return VectorField(tuple(comps))
    if len(data) != len(names):
        raise ValueError(f"a field needs {len(names)} components")
    return VectorField(tuple(parse_poly(c, names) for c in data))


class ChartFile:
    """Chart plus the named functions and fields defined alongside it."""

    def __init__(self, data: Mapping):
        if not isinstance(data, Mapping) or "dim" not in data or "ranks" not in data or "frame" not in data:
            raise ValueError("chart file needs 'dim', 'ranks' and 'frame'")
        n = int(data["dim"])
        names = tuple(data.get("names") or (f"u{i + 1}" for i in range(n)))
        if len(names) != n:
            raise ValueError("need one name per variable")
        frame = tuple(parse_field(X, names) for X in data["frame"])
        if len(frame) != n:
            raise ValueError(f"expected {n} frame fields, got {len(frame)}")
        normal = data.get("normal_vars")
        if normal is not None:
            if any(not isinstance(i, int) or not 1 <= i <= n for i in normal):
                raise ValueError("normal_vars are 1-based variable indices")
            normal = frozenset(i - 1 for i in normal)
        self.chart = FilteredChart(tuple(data["ranks"]), frame, normal, names if data.get("names") else None)
        self.names = names
        self.functions = {k: parse_poly(v, names) for k, v in (data.get("functions") or {}).items()}
        self.fields = {k: parse_field(v, names) for k, v in (data.get("fields") or {}).items()}

    @classmethod
    def load(cls, path: str | Path) -> "ChartFile":
        with open(path) as fh:
            return cls(json.load(fh))


def chart_document(chart: FilteredChart, *, functions=None, fields=None, description: str | None = None) -> dict:
    doc = chart.to_json()
    if description:
        doc["description"] = description
    if functions:
        doc["functions"] = {k: v.to_json() for k, v in functions.items()}
    if fields:
        doc["fields"] = {k: v.to_json() for k, v in fields.items()}
    return doc
