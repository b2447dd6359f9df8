"""JSON matrix collections.

A collection file looks like::

    {"m": 2, "kind": "spd", "items": [{"rows": 2, "data": [[2, 0], [0, 1]]}, ...]}

``data`` is a row-major nested array (or a flat row-major list when ``rows``
is given).  A bare top-level array of items is accepted too, and a bare
number stands for a 1 x 1 matrix.  An item whose ``data`` nests three deep,
or which carries ``matrices``, is a tuple of matrices (for joint densities).
"""

import json

import numpy as np

from .errors import ShapeError
from .linalg import check_symmetric, spd_eigh

KINDS = ("spd", "block")


class DataError(ValueError):
    """Input that cannot be read as a matrix collection."""


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def _depth(obj):
    depth = 0
    while isinstance(obj, list):
        if not obj:
            return depth + 1
        obj = obj[0]
        depth += 1
    return depth


def _matrix(obj, m=None, rows=None, where="item"):
    if isinstance(obj, dict):
        rows = obj.get("rows", rows)
        if "data" not in obj:
            raise DataError(f"{where}: missing 'data'")
        obj = obj["data"]
    try:
        A = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"{where}: not a numeric rectangular array") from None
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        if rows is None and m is None:
            raise DataError(f"{where}: a flat array needs 'rows' or the collection's 'm'")
        rows = int(rows) if rows is not None else A.size // int(m)
        if rows <= 0 or A.size % rows:
            raise DataError(f"{where}: {A.size} values do not split into {rows} rows")
        A = A.reshape(rows, -1)
    elif A.ndim != 2:
        raise DataError(f"{where}: expected a matrix, got a {A.ndim}-D array")
    if rows is not None and A.shape[0] != int(rows):
        raise DataError(f"{where}: declared {rows} rows, found {A.shape[0]}")
    if m is not None and A.shape[1] != int(m):
        raise DataError(f"{where}: expected {m} columns, found {A.shape[1]}")
    if not np.all(np.isfinite(A)):
        raise DataError(f"{where}: non-finite entries")
    return A


def _item(obj, m, where):
    """One item as a list of matrices."""
    if isinstance(obj, dict) and "matrices" in obj:
        return [_matrix(x, m, where=f"{where}[{j}]") for j, x in enumerate(obj["matrices"])]
    data = obj["data"] if isinstance(obj, dict) and "data" in obj else obj
    if isinstance(data, list) and _depth(data) == 3:
        return [_matrix(x, m, where=f"{where}[{j}]") for j, x in enumerate(data)]
    return [_matrix(obj, m, where=where)]


def parse_collection(doc, kind=None, validate=True, tuples=False):
    """Items of a collection document.

    Returns ``(m, kind, items)``; ``items`` holds arrays, or lists of arrays
    when ``tuples`` is set.  With ``validate`` an spd collection must hold
    symmetric positive-definite matrices and a block collection needs
    ``rows >= m``.
    """
    if isinstance(doc, dict):
        m = doc.get("m")
        declared = doc.get("kind")
        if declared is not None and declared not in KINDS:
            raise DataError(f"kind must be one of {KINDS}, got {declared!r}")
        if kind is not None and declared is not None and declared != kind:
            raise DataError(f"expected a {kind} collection, file declares {declared}")
        kind = kind or declared
        raw = doc.get("items")
        if not isinstance(raw, list):
            raise DataError("collection needs an 'items' array")
    elif isinstance(doc, list):
        m, raw = None, doc
    else:
        raise DataError("expected a collection object or an array of matrices")
    if m is not None and (not isinstance(m, int) or m < 1):
        raise DataError(f"'m' must be a positive integer, got {m!r}")
    items = [_item(obj, m, f"items[{i}]") for i, obj in enumerate(raw)]
    if not items:
        raise DataError("collection is empty")
    if m is None:
        m = items[0][0].shape[1]
    for i, mats in enumerate(items):
        for A in mats:
            if A.shape[1] != m:
                raise DataError(f"items[{i}]: expected {m} columns, found {A.shape[1]}")
    if validate:
        for i, mats in enumerate(items):
            for A in mats:
                _validate(A, kind, m, f"items[{i}]")
    if not tuples:
        if any(len(mats) != 1 for mats in items):
            raise DataError("expected one matrix per item")
        items = [mats[0] for mats in items]
    return m, kind, items


def _validate(A, kind, m, where):
    if kind == "spd":
        if A.shape != (m, m):
            raise DataError(f"{where}: spd items must be {m}x{m}, got {A.shape[0]}x{A.shape[1]}")
        try:
            check_symmetric(A, where)
            spd_eigh(A, where)
        except ShapeError as exc:
            raise DataError(str(exc)) from None
        except ValueError as exc:
            raise DataError(f"{where}: not positive definite ({exc})") from None
    elif kind == "block" and A.shape[0] < m:
        raise DataError(f"{where}: block has {A.shape[0]} rows, needs at least m={m}")


def read_collection(path, kind=None, validate=True, tuples=False):
    return parse_collection(load_json(path), kind, validate, tuples)


def to_nested(A):
    return np.asarray(A, dtype=float).tolist()


def collection_doc(mats, kind):
    mats = [np.asarray(A, dtype=float) for A in mats]
    m = mats[0].shape[1] if mats else 0
    return {"m": m, "kind": kind, "items": [{"rows": A.shape[0], "data": to_nested(A)} for A in mats]}


def dumps(doc):
    """Deterministic JSON; floats are written with round-trip precision."""
    return json.dumps(doc, sort_keys=False, allow_nan=True)
