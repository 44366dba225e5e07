#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from fractions import Fraction
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from scaling.bl_apps import BLDatum, MatroidPair
from scaling.errors import PreconditionViolated, SchemaError
from scaling.invariant_core import TorusVector, WeightSystem
from scaling.matrix_scaling import NonNegMatrix
from scaling.operator_scaling import MatrixTuple
from scaling.tensor_scaling import TensorTuple
from utils.helpers import parse_rational

NULLCONE_FLAVORS = ("torus", "matrix-support", "tensor-support", "operator")


def _require(doc: Dict[str, Any], key: str, kind, where: str = ""):
    """Fetch a required field and check its JSON type"""
    name = f"{where}.{key}" if where else key
    if not isinstance(doc, dict):
        raise SchemaError(where or "input", "expected a JSON object")
    if key not in doc:
        raise SchemaError(name, "missing required field")
    value = doc[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaError(name, f"expected an integer, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise SchemaError(name, f"expected a string, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise SchemaError(name, f"expected a list, got {type(value).__name__}")
    return value


def _positive(value: int, name: str) -> int:
    if value <= 0:
        raise SchemaError(name, f"must be positive, got {value}")
    return value


def _rational(value: Any, name: str) -> Fraction:
    try:
        return parse_rational(value)
    except (ValueError, ZeroDivisionError) as e:
        raise SchemaError(name, str(e))


def _bits(q: Fraction) -> int:
    return max(1, abs(q.numerator).bit_length(), q.denominator.bit_length())


def _complex(value: Any, name: str) -> Tuple[complex, int]:
    """[re, im] or a real; returns the value and its exact bit length"""
    if isinstance(value, list):
        if len(value) != 2:
            raise SchemaError(name, f"complex entries are [re, im], got {value!r}")
        re, im = _rational(value[0], name), _rational(value[1], name)
    else:
        re, im = _rational(value, name), Fraction(0)
    return complex(float(re), float(im)), max(_bits(re), _bits(im))


def _square_rows(rows: Any, n: int, name: str) -> List[list]:
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise SchemaError(name, f"expected a {n}x{n} array")
    return rows


def load_matrix(doc: Dict[str, Any]) -> NonNegMatrix:
    """{"n": int, "entries": [[rational]]}"""
    n = _positive(_require(doc, "n", int), "n")
    rows = _square_rows(_require(doc, "entries", list), n, "entries")
    exact = [[_rational(x, f"entries[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(rows)]
    try:
        return NonNegMatrix.from_rows(exact)
    except PreconditionViolated as e:
        raise SchemaError("entries", e.message)


def load_marginals(doc: Dict[str, Any], n: int) -> Tuple[List[Fraction], List[Fraction]]:
    """Required "r" and "c" target marginals of a matrix-rc document; both must have n entries"""
    result = []
    for key in ("r", "c"):
        values = _require(doc, key, list)
        if len(values) != n:
            raise SchemaError(key, f"expected {n} entries, got {len(values)}")
        result.append([_rational(x, f"{key}[{i}]") for i, x in enumerate(values)])
    return result[0], result[1]


def load_tuple(doc: Dict[str, Any]) -> MatrixTuple:
    """{"m", "n", "matrices": [[[ [re, im] ]]]}"""
    m = _positive(_require(doc, "m", int), "m")
    n = _positive(_require(doc, "n", int), "n")
    matrices = _require(doc, "matrices", list)
    if len(matrices) != m:
        raise SchemaError("matrices", f"expected {m} matrices, got {len(matrices)}")
    arr = np.zeros((m, n, n), dtype=complex)
    bits = 1
    for k, mat in enumerate(matrices):
        for i, row in enumerate(_square_rows(mat, n, f"matrices[{k}]")):
            for j, x in enumerate(row):
                arr[k, i, j], b = _complex(x, f"matrices[{k}][{i}][{j}]")
                bits = max(bits, b)
    return MatrixTuple(arr, bits)


def load_tensor(doc: Dict[str, Any]) -> TensorTuple:
    """{"m", "shape": [n_1..n_d], "entries": one row-major list of [re, im] per tensor}"""
    m = _positive(_require(doc, "m", int), "m")
    shape = _require(doc, "shape", list)
    if not shape or any(isinstance(x, bool) or not isinstance(x, int) or x <= 0 for x in shape):
        raise SchemaError("shape", f"expected positive integers, got {shape!r}")
    size = int(np.prod(shape))
    entries = _require(doc, "entries", list)
    if len(entries) != m:
        raise SchemaError("entries", f"expected {m} tensors, got {len(entries)}")
    arr = np.zeros((m, size), dtype=complex)
    bits = 1
    for k, flat in enumerate(entries):
        if not isinstance(flat, list) or len(flat) != size:
            raise SchemaError(f"entries[{k}]", f"expected {size} entries in row-major order")
        for idx, x in enumerate(flat):
            arr[k, idx], b = _complex(x, f"entries[{k}][{idx}]")
            bits = max(bits, b)
    return TensorTuple(arr.reshape((m, *shape)), bits)


def _real_matrix(rows: Any, shape: Tuple[int, int], name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != shape[0] or any(
            not isinstance(r, list) or len(r) != shape[1] for r in rows):
        raise SchemaError(name, f"expected a {shape[0]}x{shape[1]} array")
    return np.array([[float(_rational(x, name)) for x in row] for row in rows], dtype=float).reshape(shape)


def load_bl(doc: Dict[str, Any]) -> BLDatum:
    """{"n", "blocks": [{"ni", "B"}], "p": [rational]}"""
    n = _positive(_require(doc, "n", int), "n")
    blocks = _require(doc, "blocks", list)
    p = _require(doc, "p", list)
    if not blocks:
        raise SchemaError("blocks", "at least one block is required")
    if len(p) != len(blocks):
        raise SchemaError("p", f"expected {len(blocks)} exponents, got {len(p)}")
    maps = []
    for i, block in enumerate(blocks):
        ni = _positive(_require(block, "ni", int, f"blocks[{i}]"), f"blocks[{i}].ni")
        maps.append(_real_matrix(_require(block, "B", list, f"blocks[{i}]"), (ni, n), f"blocks[{i}].B"))
    exponents = [_rational(x, f"p[{i}]") for i, x in enumerate(p)]
    try:
        return BLDatum(tuple(maps), tuple(exponents))
    except PreconditionViolated as e:
        raise SchemaError("p", e.message)


def _vectors(rows: Any, name: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not isinstance(rows[0], list) or not rows[0]:
        raise SchemaError(name, "expected a non-empty list of vectors")
    return _real_matrix(rows, (len(rows), len(rows[0])), name)


def load_forster(doc: Dict[str, Any]) -> np.ndarray:
    """{"vectors": [[number]]}, one row per vector"""
    return _vectors(_require(doc, "vectors", list), "vectors")


def load_matroid(doc: Dict[str, Any]) -> Tuple[MatroidPair, List[Fraction]]:
    """{"v": [[number]], "w": [[number]], "x": [rational]}"""
    v = _vectors(_require(doc, "v", list), "v")
    w = _vectors(_require(doc, "w", list), "w")
    if v.shape != w.shape:
        raise SchemaError("w", f"shape {w.shape} differs from v {v.shape}")
    x = _require(doc, "x", list)
    if len(x) != v.shape[0]:
        raise SchemaError("x", f"expected {v.shape[0]} coordinates, got {len(x)}")
    return MatroidPair(v, w), [_rational(q, f"x[{i}]") for i, q in enumerate(x)]


def _index_tuples(rows: Any, bounds: Sequence[int], name: str) -> List[Tuple[int, ...]]:
    if not isinstance(rows, list):
        raise SchemaError(name, "expected a list of index tuples")
    result = []
    for k, row in enumerate(rows):
        if (not isinstance(row, list) or len(row) != len(bounds)
                or any(isinstance(j, bool) or not isinstance(j, int) or not 0 <= j < n for j, n in zip(row, bounds))):
            raise SchemaError(f"{name}[{k}]", f"expected {len(bounds)} 0-based indices below {list(bounds)}")
        result.append(tuple(row))
    return result


def load_nullcone(doc: Dict[str, Any], flavor: str = None) -> Tuple[str, Dict[str, Any]]:
    """Flavor-tagged null-cone query; --flavor overrides the document's "flavor" field"""
    flavor = flavor or _require(doc, "flavor", str)
    if flavor not in NULLCONE_FLAVORS:
        raise SchemaError("flavor", f"expected one of {list(NULLCONE_FLAVORS)}, got {flavor!r}")

    if flavor == "torus":
        omegas = _require(doc, "omegas", list)
        if not omegas or any(not isinstance(w, list) for w in omegas):
            raise SchemaError("omegas", "expected a non-empty list of integer weights")
        width = len(omegas[0])
        for j, w in enumerate(omegas):
            if len(w) != width or any(isinstance(a, bool) or not isinstance(a, int) for a in w):
                raise SchemaError(f"omegas[{j}]", f"expected {width} integers")
        ws = WeightSystem(width, tuple(tuple(w) for w in omegas))
        if "coefficients" in doc:
            coefficients = _require(doc, "coefficients", list)
            if len(coefficients) != ws.m:
                raise SchemaError("coefficients", f"expected {ws.m} entries")
            v = TorusVector(tuple(_complex(c, f"coefficients[{j}]")[0] for j, c in enumerate(coefficients)))
        else:
            v = TorusVector.full(ws.m)
        return flavor, {"weights": ws, "vector": v}

    if flavor == "matrix-support":
        n = _positive(_require(doc, "n", int), "n")
        return flavor, {"n": n, "support": _index_tuples(_require(doc, "support", list), (n, n), "support")}

    if flavor == "tensor-support":
        shape = _require(doc, "shape", list)
        if not shape or any(isinstance(x, bool) or not isinstance(x, int) or x <= 0 for x in shape):
            raise SchemaError("shape", f"expected positive integers, got {shape!r}")
        return flavor, {"shape": tuple(shape), "support": _index_tuples(_require(doc, "support", list), shape, "support")}

    return flavor, {"tuple": load_tuple(doc)}
