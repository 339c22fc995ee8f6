"""Cyclic-vector certificates for diagonal unitaries.

Everything here is an exact formula evaluated in arbitrary-precision
arithmetic: Vandermonde data at the eigenvalues, the rapidly decreasing
b-sequence, the cyclic vector y = sum b_j e_j, and basis-vector recovery
from the orbit of y with a certified error bound.  Precision is the only
obstacle; when cancellation in the b-recursion eats the working mantissa
the computation refuses to continue rather than emit a doubtful value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf

from .exceptions import (HypothesisViolationError, MaxStepsExceededError,
                         PositivityLostError)
from .serialization import mpf_from_decimal, mpf_to_decimal

DEFAULT_PRECISION = 512

MIN_PRECISION = 128

_GUARD_BITS = 64


@dataclass
class EigenvalueList:
    values: list
    min_separation: float

    @classmethod
    def from_values(cls, values) -> "EigenvalueList":
        vals = []
        for v in values:
            if isinstance(v, (mp.mpc, mp.mpf)):
                # keep as-is: reconstructing would round to the ambient
                # working precision and push the value off the circle
                vals.append(v)
            else:
                vals.append(mp.mpc(complex(v)))
        if not vals:
            raise HypothesisViolationError("need at least one eigenvalue")
        for k, lam in enumerate(vals):
            if abs(float(abs(lam)) - 1.0) > 1e-12:
                raise HypothesisViolationError(
                    f"eigenvalue {k} is off the unit circle")
        sep = math.inf
        n = len(vals)
        for i in range(n):
            for j in range(i + 1, n):
                sep = min(sep, float(abs(vals[i] - vals[j])))
        if n > 1 and not sep > 0.0:
            raise HypothesisViolationError(
                "eigenvalues must be pairwise distinct")
        if n == 1:
            sep = 2.0
        return cls(values=vals, min_separation=sep)

    @property
    def dim(self) -> int:
        return len(self.values)


def roots_of_unity(d: int, precision: int = DEFAULT_PRECISION) -> EigenvalueList:
    if d < 1:
        raise HypothesisViolationError("d must be positive")
    with mp.workprec(precision + _GUARD_BITS):
        vals = [mp.expjpi(mpf(2 * j) / d) for j in range(d)]
    return EigenvalueList.from_values(vals)


def random_phase_eigenvalues(gen: np.random.Generator, d: int,
                             precision: int = DEFAULT_PRECISION) -> EigenvalueList:
    """Seeded unit-circle phases with chordal separation at least 2 pi/(4d)."""
    if d < 1:
        raise HypothesisViolationError("d must be positive")
    chord_floor = 2.0 * math.pi / (4 * d)
    phase_floor = 2.0 * math.asin(min(1.0, chord_floor / 2.0))
    for _ in range(500):
        phases = np.sort(gen.uniform(0.0, 2.0 * math.pi, d))
        gaps = np.diff(phases, append=phases[0] + 2.0 * math.pi)
        if d == 1 or float(gaps.min()) >= phase_floor:
            with mp.workprec(precision + _GUARD_BITS):
                vals = [mp.expj(mpf(float(p))) for p in phases]
            lam = EigenvalueList.from_values(vals)
            if lam.min_separation >= chord_floor:
                return lam
    raise MaxStepsExceededError("could not draw separated phases")


def _vandermonde_rows(lam: EigenvalueList, n: int) -> list[list]:
    rows = []
    for j in range(n + 1):
        v = lam.values[j]
        row = [mp.mpc(1)]
        for _ in range(n):
            row.append(row[-1] * v)
        rows.append(row)
    return rows


def vandermonde(lam: EigenvalueList, n: int,
                precision: int = DEFAULT_PRECISION):
    """The matrix (lambda_j^k) for 0 <= j, k <= n with its determinant."""
    if not 0 <= n < lam.dim:
        raise HypothesisViolationError("order out of range")
    with mp.workprec(precision + _GUARD_BITS):
        mat = mp.matrix(_vandermonde_rows(lam, n))
        det = mp.det(mat)
    with mp.workprec(precision):
        return mat, +det


def a_value(lam: EigenvalueList, n: int,
            precision: int = DEFAULT_PRECISION):
    """(n+1)! / |det Lambda_n|."""
    _, det = vandermonde(lam, n, precision=precision)
    with mp.workprec(precision + _GUARD_BITS):
        val = mp.factorial(n + 1) / abs(det)
    with mp.workprec(precision):
        return +val


def _lu_nopivot_pivots(rows: list[list]) -> list:
    """Diagonal of U in the unpivoted LU; prefix products are the leading
    principal minors, which for these rows are the nested determinants."""
    a = [list(r) for r in rows]
    n = len(a)
    pivots = []
    for k in range(n):
        p = a[k][k]
        if p == 0:
            raise HypothesisViolationError("singular leading block")
        pivots.append(p)
        for i in range(k + 1, n):
            f = a[i][k] / p
            if f == 0:
                continue
            for j in range(k + 1, n):
                a[i][j] -= f * a[k][j]
    return pivots


@dataclass
class BSequence:
    precision_bits: int
    a_values: list
    b_values: list

    @property
    def truncation(self) -> int:
        return len(self.a_values) - 1


def b_sequence(lam: EigenvalueList, truncation: int,
               precision: int = DEFAULT_PRECISION) -> BSequence:
    """b_0 = 1 and b_(M+1) = (min_(N<=M) (b_N^2/a_N^2 - sum_(j=N+1)^M b_j^2)/2)^(1/2).

    The minimand is positive in exact arithmetic; once it falls below
    2^(10-precision) of the largest b_N^2/a_N^2 term, the stated
    precision can no longer carry it meaningfully against the leading
    scale, and positivity_lost asks for more bits.
    """
    if precision < MIN_PRECISION:
        raise HypothesisViolationError(
            f"precision below {MIN_PRECISION} bits")
    if not 0 <= truncation < lam.dim:
        raise HypothesisViolationError("truncation out of range")
    with mp.workprec(precision + _GUARD_BITS):
        pivots = _lu_nopivot_pivots(_vandermonde_rows(lam, truncation))
        a2 = []
        a_vals = []
        det = mp.mpc(1)
        fact = mpf(1)
        for n in range(truncation + 1):
            det *= pivots[n]
            fact *= n + 1
            a_n = fact / abs(det)
            a_vals.append(a_n)
            a2.append(a_n * a_n)
        floor_scale = mpf(2) ** (10 - precision)
        b2 = [mpf(1)]
        tails = [mpf(0)]
        for m in range(truncation + 1):
            best = None
            largest = mpf(0)
            for n in range(m + 1):
                term = b2[n] / a2[n]
                cand = term - tails[n]
                largest = max(largest, term)
                if best is None or cand < best:
                    best = cand
            if best <= floor_scale * largest:
                raise PositivityLostError(
                    f"b-recursion lost positivity at index {m + 1} "
                    f"with {precision} bits; raise precision_bits")
            nxt = best / 2
            b2.append(nxt)
            for n in range(m + 1):
                tails[n] += nxt
            tails.append(mpf(0))
        with mp.workprec(precision):
            a_out = [+v for v in a_vals]
            b_out = [+mp.sqrt(v) for v in b2]
    return BSequence(precision_bits=precision, a_values=a_out, b_values=b_out)


def rapid_decrease_ok(bs: BSequence) -> bool:
    """Truncated check: sum_(j=N+1)^(K+1) b_j^2 <= b_N^2/a_N^2 for all N <= K."""
    with mp.workprec(bs.precision_bits + _GUARD_BITS):
        b2 = [v * v for v in bs.b_values]
        for n in range(len(bs.a_values)):
            tail = mp.fsum(b2[n + 1:])
            if tail > b2[n] / (bs.a_values[n] ** 2):
                return False
    return True


@dataclass
class CyclicVectorCertificate:
    eigenvalues: EigenvalueList
    truncation: int
    y: list
    b: BSequence


def cyclic_vector(lam: EigenvalueList, truncation: int,
                  precision: int = DEFAULT_PRECISION) -> CyclicVectorCertificate:
    """y = sum_(j<=K) b_j e_j in the eigenbasis of the diagonal unitary."""
    bs = b_sequence(lam, truncation, precision=precision)
    y = [bs.b_values[j] if j <= truncation else mpf(0)
         for j in range(lam.dim)]
    return CyclicVectorCertificate(eigenvalues=lam, truncation=truncation,
                                   y=y, b=bs)


def approximate_basis_vector(cert: CyclicVectorCertificate, k: int,
                             n: int):
    """Recover e_k from the orbit of y: ((y, Uy, ..., U^n y) inv(Lambda_n))_k / b_k.

    Returns the vector together with the certified bound b_n^2/b_k^2 on
    the squared error; the coordinates below index n reproduce e_k up to
    precision and the error lives entirely in the tail.
    """
    if not 0 <= k <= n <= cert.truncation:
        raise HypothesisViolationError("indices out of range")
    lam = cert.eigenvalues
    prec = cert.b.precision_bits
    with mp.workprec(prec + _GUARD_BITS):
        mat = mp.matrix(_vandermonde_rows(lam, n))
        rhs = mp.matrix([mp.mpc(1) if i == k else mp.mpc(0)
                         for i in range(n + 1)])
        col = mp.lu_solve(mat, rhs)
        b_k = cert.b.b_values[k]
        approx = []
        for j in range(lam.dim):
            v = lam.values[j]
            power = mp.mpc(1)
            acc = mp.mpc(0)
            for i in range(n + 1):
                acc += power * col[i]
                power *= v
            approx.append(cert.y[j] * acc / b_k)
        bound = (cert.b.b_values[n] / b_k) ** 2
        with mp.workprec(prec):
            return [+a for a in approx], +bound


def finite_dim_cyclic_test(lam: EigenvalueList, v: np.ndarray) -> bool:
    """Cyclicity for the diagonal model: every eigenbasis coordinate nonzero."""
    v = np.asarray(v)
    if v.shape[0] != lam.dim:
        raise HypothesisViolationError("vector dimension mismatch")
    return bool(np.all(v != 0))


def certificate_payload(cert: CyclicVectorCertificate) -> dict:
    """JSON-ready mapping with exact decimal strings for every scalar."""
    with mp.workprec(cert.b.precision_bits):
        return {
            "precision_bits": cert.b.precision_bits,
            "truncation": cert.truncation,
            "min_separation": cert.eigenvalues.min_separation,
            "eigenvalues": [[mpf_to_decimal(v.real), mpf_to_decimal(v.imag)]
                            for v in cert.eigenvalues.values],
            "a_values": [mpf_to_decimal(v) for v in cert.b.a_values],
            "b_values": [mpf_to_decimal(v) for v in cert.b.b_values],
            "y": [mpf_to_decimal(v) for v in cert.y],
        }


def certificate_from_payload(payload: dict) -> CyclicVectorCertificate:
    prec = int(payload["precision_bits"])
    # parse at guard width: the decimal strings are exact, so any mantissa
    # that fits comes back bit-identical
    wide = prec + _GUARD_BITS
    vals = [mp.mpc(mpf_from_decimal(re, wide), mpf_from_decimal(im, wide))
            for re, im in payload["eigenvalues"]]
    lam = EigenvalueList.from_values(vals)
    bs = BSequence(
        precision_bits=prec,
        a_values=[mpf_from_decimal(v, wide) for v in payload["a_values"]],
        b_values=[mpf_from_decimal(v, wide) for v in payload["b_values"]])
    return CyclicVectorCertificate(
        eigenvalues=lam, truncation=int(payload["truncation"]),
        y=[mpf_from_decimal(v, wide) for v in payload["y"]], b=bs)
