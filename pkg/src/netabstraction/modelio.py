"""JSON model files.

Layout::

    {
      "L": 4, "K": 4,
      "G": {"1,4": {"num": ["0", "3/10"], "den": ["1"]}, ...},
      "R": {...}, "H": {...},
      "Lambda": [["1", "0"], ["0", "1"]],
      "labels": {"nodes": ["1", "2"], "signals": ["r1", "r2"]}
    }

Keys of the sparse maps are 1-based ``"row,col"``. Coefficients are ascending
in the delay operator and written as exact ``"p/q"`` strings. ``R`` defaults
to the identity when omitted entirely (and then ``K = L``), ``H`` and
``Lambda`` likewise. Transformed models may carry ``"noise_monic": false``
and a noise dimension ``"p"`` when ``H`` is not square.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import DimensionMismatch, ModelFormatError
from .network import NetworkModel, NoiseRep, identity_lambda
from .ratfun import Polynomial, RationalFunction, TransferMatrix

SCHEMA = 1


def parse_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise ModelFormatError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # the decimal literal as written, not its binary expansion
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelFormatError(f"bad rational {x!r}") from None
    raise ModelFormatError(f"bad rational {x!r}")


def format_rational(x) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def parse_function(obj) -> RationalFunction:
    if isinstance(obj, (int, float, str)) and not isinstance(obj, bool):
        return RationalFunction.coerce(parse_rational(obj))
    if not isinstance(obj, dict) or "num" not in obj:
        raise ModelFormatError(f"entry must be {{'num': [...], 'den': [...]}}, got {obj!r}")
    num = [parse_rational(c) for c in obj["num"]]
    den = [parse_rational(c) for c in obj.get("den", ["1"])]
    if not any(den):
        raise ModelFormatError("zero denominator")
    return RationalFunction(Polynomial(num), Polynomial(den))


def format_function(f: RationalFunction) -> dict:
    return {
        "num": [format_rational(c) for c in f.num.coeffs],
        "den": [format_rational(c) for c in f.den.coeffs],
    }


def _parse_key(key: str, rows: int, cols: int) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in key.split(","))
    except ValueError:
        raise ModelFormatError(f"bad entry key {key!r}, expected 'row,col'") from None
    if not (1 <= a <= rows and 1 <= b <= cols):
        raise ModelFormatError(f"entry {key!r} outside {rows}x{cols}")
    return a - 1, b - 1


def parse_matrix(obj, rows: int, cols: int, name: str) -> TransferMatrix:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{name} must be a sparse map of 'row,col' entries")
    items = {}
    for key, val in obj.items():
        ij = _parse_key(key, rows, cols)
        items[ij] = parse_function(val)
    return TransferMatrix.from_sparse(rows, cols, items)


def format_matrix(m: TransferMatrix) -> dict:
    return {
        f"{i + 1},{j + 1}": format_function(x)
        for i, row in enumerate(m.entries)
        for j, x in enumerate(row)
        if x
    }


def _count(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ModelFormatError(f"{key!r} must be a nonnegative integer")
    return v


def model_from_dict(doc: dict) -> NetworkModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model must be a JSON object")
    n = _count(doc, "L")
    if "R" in doc:
        k = _count(doc, "K")
        R = parse_matrix(doc["R"], n, k, "R")
    else:
        k = _count(doc, "K") if "K" in doc else n
        if k != n:
            raise ModelFormatError("R may only be omitted when K equals L")
        R = TransferMatrix.identity(n)
    G = parse_matrix(doc.get("G", {}), n, n, "G")

    p = doc.get("p", n)
    if not isinstance(p, int) or p < 0:
        raise ModelFormatError("'p' must be a nonnegative integer")
    H = parse_matrix(doc["H"], n, p, "H") if "H" in doc else TransferMatrix.identity(n)
    if "Lambda" in doc:
        lam = doc["Lambda"]
        if not isinstance(lam, list) or any(not isinstance(r, list) for r in lam):
            raise ModelFormatError("Lambda must be a list of rows")
        lam = tuple(tuple(parse_rational(x) for x in r) for r in lam)
    else:
        lam = identity_lambda(H.cols)
    monic = doc.get("noise_monic", True)
    if not isinstance(monic, bool):
        raise ModelFormatError("'noise_monic' must be a boolean")

    nodes, signals = _labels(doc.get("labels"))
    try:
        return NetworkModel(G, R, NoiseRep(H, lam, monic), nodes, signals)
    except DimensionMismatch as exc:
        raise ModelFormatError(str(exc)) from exc


def _labels(obj) -> tuple[tuple, tuple]:
    if obj is None:
        return (), ()
    if isinstance(obj, list):
        return tuple(str(x) for x in obj), ()
    if isinstance(obj, dict):
        return (
            tuple(str(x) for x in obj.get("nodes", ())),
            tuple(str(x) for x in obj.get("signals", ())),
        )
    raise ModelFormatError("labels must be a list or {'nodes': [...], 'signals': [...]}")


def model_to_dict(m: NetworkModel) -> dict:
    doc = {
        "L": m.L,
        "K": m.K,
        "G": format_matrix(m.G),
        "R": format_matrix(m.R),
        "H": format_matrix(m.noise.F),
        "Lambda": [[format_rational(x) for x in row] for row in m.noise.Lambda],
        "labels": {"nodes": list(m.node_labels), "signals": list(m.signal_labels)},
    }
    if m.noise.F.cols != m.L:
        doc["p"] = m.noise.F.cols
    if not m.noise.monic:
        doc["noise_monic"] = False
    return doc


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc


def load_model(path) -> NetworkModel:
    return model_from_dict(read_json(path))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def save_model(m: NetworkModel, path) -> None:
    Path(path).write_text(dumps(model_to_dict(m)))
