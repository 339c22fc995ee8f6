"""JSON and CSV encodings for vectors, operators, and high-precision values.

Operator/vector JSON is {"dim": d, "entries": [[re, im], ...]}, row-major
for operators and flat for vectors.  Scalars go through Python floats whose
repr is the shortest round-tripping decimal, so a write/read cycle is
bit-exact.  High-precision reals are stored as exact decimal strings of the
underlying binary value; re-parsing at the same precision recovers the
value exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from mpmath import mp

from .exceptions import HypothesisViolationError


def vector_to_json(v: np.ndarray) -> dict:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise HypothesisViolationError("expected a one-dimensional vector")
    return {"dim": int(v.shape[0]),
            "entries": [[float(c.real), float(c.imag)] for c in v]}


def vector_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != dim:
        raise HypothesisViolationError(
            f"vector entry count {len(entries)} does not match dim {dim}")
    v = np.array([complex(re, im) for re, im in entries], dtype=complex)
    if not np.isfinite(v).all():
        raise HypothesisViolationError("vector has non-finite entries")
    return v


def operator_to_json(a) -> dict:
    a = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise HypothesisViolationError("expected a square operator")
    d = a.shape[0]
    flat = a.reshape(-1)
    return {"dim": int(d),
            "entries": [[float(c.real), float(c.imag)] for c in flat]}


def operator_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != dim * dim:
        raise HypothesisViolationError(
            f"operator entry count {len(entries)} does not match dim {dim}")
    a = np.array([complex(re, im) for re, im in entries],
                 dtype=complex).reshape(dim, dim)
    if not np.isfinite(a).all():
        raise HypothesisViolationError("operator has non-finite entries")
    return a


def mpf_to_decimal(x) -> str:
    """Exact decimal string of a binary float, at any precision."""
    if not hasattr(x, "_mpf_"):
        # plain Python numbers; widen the context so the conversion is exact
        bits = x.bit_length() + 8 if isinstance(x, int) else 64
        with mp.workprec(max(64, bits)):
            x = mp.mpf(x)
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return "0"
    prefix = "-" if sign else ""
    if exp >= 0:
        return prefix + str(man << exp)
    k = -exp
    digits = str(man * 5 ** k)
    if len(digits) <= k:
        digits = "0" * (k - len(digits) + 1) + digits
    return prefix + digits[:-k] + "." + digits[-k:]


def mpf_from_decimal(s: str, precision_bits: int):
    with mp.workprec(precision_bits):
        return +mp.mpf(s)


def dump_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def fmt(value) -> str:
    """Canonical cell text for CSV output."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")
